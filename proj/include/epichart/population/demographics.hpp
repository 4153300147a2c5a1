// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <utility>
#include <vector>

#include "epichart/core/simulation.hpp"

namespace epichart {

// Piecewise-constant hazard over age bands. `edges` has one entry per band
// start; the last band is open-ended.
struct HazardTable {
  std::vector<double> edges;
  std::vector<double> hazards;

  double at(double age) const {
    if (age < edges.front()) return 0.0;  // before the first band
    std::size_t band = 0;
    while (band + 1 < edges.size() && age >= edges[band + 1]) ++band;
    return hazards[band];
  }

  double max_hazard() const {
    return *std::max_element(hazards.begin(), hazards.end());
  }

  // Largest hazard at or above the given age; a valid thinning bound for a
  // process whose subject only grows older.
  double max_from(double age) const {
    double m = 0.0;
    for (std::size_t i = 0; i < hazards.size(); ++i) {
      double band_end = (i + 1 < edges.size())
                            ? edges[i + 1]
                            : std::numeric_limits<double>::infinity();
      if (band_end > age) m = std::max(m, hazards[i]);
    }
    return m;
  }

  void validate(const char* what) const {
    if (edges.empty() || edges.size() != hazards.size()) {
      throw std::invalid_argument(std::string(what) + ": bad table shape");
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (edges[i] <= edges[i - 1]) {
        throw std::invalid_argument(std::string(what) +
                                    ": edges not ascending");
      }
    }
    for (double h : hazards) {
      if (h < 0.0 || !std::isfinite(h)) {
        throw std::invalid_argument(std::string(what) + ": bad hazard");
      }
    }
  }
};

// Expected lifespan under a piecewise-exponential survival model; exact.
inline double life_expectancy(const HazardTable& mortality) {
  mortality.validate("mortality");
  if (!(mortality.hazards.back() > 0.0)) {
    throw std::invalid_argument("mortality: open-ended band needs hazard > 0");
  }
  double total = 0.0;
  double surv = 1.0;
  for (std::size_t i = 0; i < mortality.edges.size(); ++i) {
    double h = mortality.hazards[i];
    if (i + 1 < mortality.edges.size()) {
      double width = mortality.edges[i + 1] - mortality.edges[i];
      if (h > 0.0) {
        total += surv * (1.0 - std::exp(-h * width)) / h;
        surv *= std::exp(-h * width);
      } else {
        total += surv * width;
      }
    } else {
      total += surv / h;
    }
  }
  return total;
}

struct AgeBandWeights {
  std::vector<double> edges;    // band starts; last band is [last, last+5)
  std::vector<double> weights;  // relative mass per band
};

struct DemographicsConfig {
  // Empty pyramid means "derive the stationary pyramid from the mortality
  // table" (survivorship-proportional), which keeps defaults consistent.
  AgeBandWeights pyramid;

  HazardTable mortality{
      {0.0, 1.0, 40.0, 60.0, 70.0, 80.0, 90.0},
      {0.004, 0.0008, 0.004, 0.012, 0.035, 0.09, 0.35}};

  // Conception hazard by maternal age band, damped by parity. Tuned so the
  // default demography is near-stationary under the default mortality.
  HazardTable fertility{{15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 46.0},
                        {0.012, 0.066, 0.096, 0.084, 0.048, 0.012, 0.0}};
  std::vector<double> parity_multipliers{1.0, 1.0, 0.75, 0.45, 0.2, 0.0};

  double gestation_years = 0.75;  // three equal trimesters
  double postpartum_years = 0.75;

  double school_entry_age = 6.0;
  double school_exit_age = 18.0;
  double school_size = 500.0;  // auto school count = ceil(pupils/size)
  int school_count = 0;        // >0 overrides the auto count

  double home_leaving_min = 18.0;
  double home_leaving_max = 28.0;
  double couple_fraction = 0.55;  // chance a departing adult pairs up

  // Household composition of the synthetic starting population.
  double couple_household_weight = 0.62;
  std::vector<double> couple_child_weights{0.28, 0.20, 0.30, 0.14, 0.06, 0.02};
  std::vector<double> single_child_weights{0.72, 0.14, 0.09, 0.04, 0.01, 0.0};

  // Two sub-regions (dense and sparse strips) in agents per unit area.
  double urban_density = 0.3;
  double rural_density = 0.2;
  double urban_population_share = 0.7;

  std::vector<double> attitude_weights{0.65, 0.30, 0.05};

  // Vaccine acceptance u ~ Beta(a, b) for the pertussis compliance model.
  double acceptance_beta_a = 3.4;
  double acceptance_beta_b = 0.9;

  double fertility_hazard(double age, int parity) const {
    double mult =
        parity_multipliers[std::min<std::size_t>(parity,
                                                 parity_multipliers.size() - 1)];
    return fertility.at(age) * mult;
  }

  // Thinning bound for the conception process of a woman currently `age`.
  double fertility_bound(double age) const {
    double max_mult =
        *std::max_element(parity_multipliers.begin(), parity_multipliers.end());
    return fertility.max_from(age) * max_mult;
  }

  AgeBandWeights effective_pyramid() const {
    if (!pyramid.edges.empty()) return pyramid;
    // Stationary pyramid: band weight proportional to survivorship mass.
    AgeBandWeights p;
    double surv = 1.0;
    double age = 0.0;
    for (int band = 0; band < 20; ++band) {  // 5-year bands to 100
      double mass = 0.0;
      double s = surv;
      for (int step = 0; step < 5; ++step) {
        double h = std::max(mortality.at(age + step), 1e-9);
        mass += s * (1.0 - std::exp(-h)) / h;
        s *= std::exp(-h);
      }
      p.edges.push_back(age);
      p.weights.push_back(mass);
      surv = s;
      age += 5.0;
    }
    return p;
  }

  void validate() const {
    mortality.validate("mortality");
    if (!(mortality.hazards.back() > 0.0)) {
      throw std::invalid_argument("mortality: last band hazard must be > 0");
    }
    fertility.validate("fertility");
    if (parity_multipliers.empty()) {
      throw std::invalid_argument("parity_multipliers: empty");
    }
    if (!(gestation_years > 0.0) || !(postpartum_years >= 0.0)) {
      throw std::invalid_argument("gestation/postpartum: bad durations");
    }
    if (!(school_entry_age >= 0.0) || !(school_exit_age > school_entry_age)) {
      throw std::invalid_argument("school ages: exit must follow entry");
    }
    if (!(home_leaving_max >= home_leaving_min) || home_leaving_min < 0.0) {
      throw std::invalid_argument("home leaving window: bad bounds");
    }
    if (!(urban_density > 0.0) || !(rural_density > 0.0)) {
      throw std::invalid_argument("densities must be > 0");
    }
    if (urban_population_share < 0.0 || urban_population_share > 1.0) {
      throw std::invalid_argument("urban share outside [0,1]");
    }
    if (attitude_weights.size() != 3) {
      throw std::invalid_argument("attitude_weights: need 3 entries");
    }
    if (!(acceptance_beta_a > 0.0) || !(acceptance_beta_b > 0.0)) {
      throw std::invalid_argument("acceptance beta: parameters must be > 0");
    }
  }
};

// Rectangle split in two vertical strips of different density.
struct RegionLayout {
  double width = 0.0;
  double height = 0.0;
  double urban_width = 0.0;
  double urban_share = 0.0;

  Vec2 sample_position(RngRegistry& rng, Stream s) const {
    double x;
    if (rng.uniform(s) < urban_share) {
      x = rng.uniform(s, 0.0, urban_width);
    } else {
      x = rng.uniform(s, urban_width, width);
    }
    return Vec2{x, rng.uniform(s, 0.0, height)};
  }

  static RegionLayout for_population(uint64_t n,
                                     const DemographicsConfig& cfg) {
    double n_urban = cfg.urban_population_share * static_cast<double>(n);
    double n_rural = static_cast<double>(n) - n_urban;
    double area_urban = n_urban / cfg.urban_density;
    double area_rural = n_rural / cfg.rural_density;
    RegionLayout r;
    r.height = std::sqrt(area_urban + area_rural);
    r.width = (area_urban + area_rural) / r.height;
    r.urban_width = area_urban / r.height;
    r.urban_share = cfg.urban_population_share;
    return r;
  }
};

inline double sample_age(const AgeBandWeights& pyramid, RngRegistry& rng,
                         Stream s) {
  std::size_t band = rng.categorical(s, pyramid.weights);
  double lo = pyramid.edges[band];
  double hi = (band + 1 < pyramid.edges.size()) ? pyramid.edges[band + 1]
                                                : pyramid.edges[band] + 5.0;
  return rng.uniform(s, lo, hi);
}

inline double sample_beta(RngRegistry& rng, Stream s, double a, double b) {
  double x = rng.gamma(s, a, 1.0);
  double y = rng.gamma(s, b, 1.0);
  return x / (x + y);
}

// Schedules the deterministic life-course milestones (school entry/exit,
// leaving the parental household) and runs the household pairing process.
class LifeCourse {
 public:
  LifeCourse(Simulation& sim, const DemographicsConfig& cfg,
             RegionLayout region)
      : sim_(sim), cfg_(cfg), region_(region) {
    school_enter_ = sim.register_hook(
        [this](Simulation& s, AgentId a, double) { enter_school(s, a); });
    school_exit_ = sim.register_hook([](Simulation& s, AgentId a, double) {
      if (s.population().agent(a).alive) s.population().withdraw_school(a);
    });
    home_leave_ = sim.register_hook(
        [this](Simulation& s, AgentId a, double) { leave_home(s, a); });
  }

  // Call once per agent, at init or at birth. Past milestones are skipped
  // (an agent initialized at 40 is already out of school and settled).
  void attach(AgentId a) {
    const PersonAgent& p = sim_.population().agent(a);
    double age = p.age(sim_.now());
    if (age < cfg_.school_entry_age) {
      sim_.schedule_hook(p.birth_time + cfg_.school_entry_age, school_enter_,
                         a);
    }
    if (age < cfg_.school_exit_age) {
      sim_.schedule_hook(p.birth_time + cfg_.school_exit_age, school_exit_, a);
    }
    double depart = sim_.rng().uniform(Stream::kDemographics,
                                       cfg_.home_leaving_min,
                                       cfg_.home_leaving_max);
    if (age < depart) {
      sim_.schedule_hook(p.birth_time + depart, home_leave_, a);
    }
  }

 private:
  void enter_school(Simulation& s, AgentId a) {
    Population& pop = s.population();
    if (!pop.agent(a).alive || pop.school_count() == 0) return;
    auto school = static_cast<int32_t>(s.rng().next_u64(
                      Stream::kDemographics) %
                  pop.school_count());
    pop.enroll_school(a, school);
  }

  void leave_home(Simulation& s, AgentId a) {
    Population& pop = s.population();
    PersonAgent& p = pop.agent(a);
    if (!p.alive) return;
    // Try to join an open single-founder household of the opposite sex;
    // otherwise found a new household at a fresh address.
    if (s.rng().bernoulli(Stream::kDemographics, cfg_.couple_fraction)) {
      for (auto it = open_singles_.begin(); it != open_singles_.end(); ++it) {
        Household& hh = pop.household(it->first);
        if (it->second != p.sex && hh.members.size() == 1 &&
            pop.agent(hh.members.front()).alive) {
          HouseholdId target = it->first;
          open_singles_.erase(it);
          pop.transfer_household(a, target);
          pop.move_agent(a, pop.household(target).pos);
          pop.household(target).parents[1] = a;
          return;
        }
      }
    }
    Vec2 pos = region_.sample_position(s.rng(), Stream::kDemographics);
    HouseholdId hh = pop.create_household(pos);
    pop.transfer_household(a, hh);
    pop.move_agent(a, pos);
    pop.household(hh).parents[0] = a;
    open_singles_.emplace_back(hh, p.sex);
    if (open_singles_.size() > 512) open_singles_.pop_front();
  }

  Simulation& sim_;
  const DemographicsConfig& cfg_;
  RegionLayout region_;
  uint16_t school_enter_ = 0;
  uint16_t school_exit_ = 0;
  uint16_t home_leave_ = 0;
  std::deque<std::pair<HouseholdId, Sex>> open_singles_;
};

// Creates the newborn: position and household inherited from the mother,
// age zero, attitude/acceptance carried over from her, milestones attached.
// Model packs layer their own charts on top afterwards.
inline AgentId process_birth(Simulation& sim, AgentId mother,
                             LifeCourse& life) {
  Population& pop = sim.population();
  Sex sex = sim.rng().bernoulli(Stream::kDemographics, 0.5) ? Sex::kFemale
                                                            : Sex::kMale;
  const PersonAgent& m = pop.agent(mother);
  Vec2 pos = m.pos;
  HouseholdId hh = m.household;
  AgentId child = pop.add_agent(sex, sim.now(), pos, hh, /*initial=*/false);
  PersonAgent& c = pop.agent(child);
  c.mother = mother;
  c.attitude = pop.agent(mother).attitude;
  c.acceptance = pop.agent(mother).acceptance;
  pop.agent(mother).parity =
      static_cast<uint8_t>(std::min<int>(pop.agent(mother).parity + 1, 250));
  life.attach(child);
  return child;
}

struct InitStats {
  RegionLayout region;
  uint64_t agents = 0;
  uint64_t households = 0;
  uint64_t schools = 0;
};

// Builds the synthetic starting population: ages from the pyramid, adults
// grouped into couple/single households with children attached, shared
// household addresses, schools for the school-aged, attitudes and
// acceptance assigned. All draws use the initialization stream.
inline InitStats init_population(Simulation& sim, uint64_t n,
                                 const DemographicsConfig& cfg,
                                 double spatial_cell_size) {
  cfg.validate();
  RngRegistry& rng = sim.rng();
  Population& pop = sim.population();
  RegionLayout region = RegionLayout::for_population(n, cfg);
  pop.configure_region(region.width, region.height, spatial_cell_size);

  AgeBandWeights pyramid = cfg.effective_pyramid();
  std::vector<double> adult_ages;
  std::vector<double> child_ages;
  for (uint64_t i = 0; i < n; ++i) {
    double age = sample_age(pyramid, rng, Stream::kInitialization);
    if (age >= cfg.home_leaving_min) {
      adult_ages.push_back(age);
    } else {
      child_ages.push_back(age);
    }
  }
  // Deterministic Fisher-Yates so household formation order is replayable.
  auto shuffle = [&rng](std::vector<double>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = rng.next_u64(Stream::kInitialization) % i;
      std::swap(v[i - 1], v[j]);
    }
  };
  shuffle(adult_ages);
  shuffle(child_ages);

  auto make_agent = [&](double age, HouseholdId hh) {
    Sex sex = rng.bernoulli(Stream::kInitialization, 0.5) ? Sex::kFemale
                                                          : Sex::kMale;
    AgentId id = pop.add_agent(sex, -age, pop.household(hh).pos, hh,
                               /*initial=*/true);
    PersonAgent& p = pop.agent(id);
    p.attitude = static_cast<Attitude>(rng.categorical(
        Stream::kInitialization,
        std::span<const double>(cfg.attitude_weights)));
    p.acceptance = static_cast<float>(sample_beta(
        rng, Stream::kInitialization, cfg.acceptance_beta_a,
        cfg.acceptance_beta_b));
    return id;
  };

  std::size_t next_adult = 0;
  std::size_t next_child = 0;
  while (next_adult < adult_ages.size()) {
    Vec2 pos = region.sample_position(rng, Stream::kInitialization);
    HouseholdId hh = pop.create_household(pos);
    bool couple =
        (adult_ages.size() - next_adult >= 2) &&
        rng.bernoulli(Stream::kInitialization, cfg.couple_household_weight);
    const std::vector<double>& child_weights =
        couple ? cfg.couple_child_weights : cfg.single_child_weights;
    AgentId a0 = make_agent(adult_ages[next_adult++], hh);
    pop.household(hh).parents[0] = a0;
    double youngest_parent_age = pop.agent(a0).age(0.0);
    if (couple) {
      AgentId a1 = make_agent(adult_ages[next_adult++], hh);
      pop.household(hh).parents[1] = a1;
      youngest_parent_age =
          std::min(youngest_parent_age, pop.agent(a1).age(0.0));
    }
    std::size_t want = rng.categorical(
        Stream::kInitialization, std::span<const double>(child_weights));
    AgentId mother = kNoAgent;
    for (AgentId pid : pop.household(hh).parents) {
      if (pid != kNoAgent && pop.agent(pid).sex == Sex::kFemale) mother = pid;
    }
    if (mother == kNoAgent) mother = a0;
    for (std::size_t k = 0; k < want && next_child < child_ages.size(); ++k) {
      // Children must be plausibly younger than the household's adults.
      if (child_ages[next_child] > youngest_parent_age - 16.0) break;
      AgentId c = make_agent(child_ages[next_child++], hh);
      pop.agent(c).mother = mother;
      pop.agent(mother).parity++;
    }
  }
  // Children left without a household: fold them into existing ones.
  while (next_child < child_ages.size()) {
    HouseholdId hh = static_cast<HouseholdId>(
        rng.next_u64(Stream::kInitialization) % pop.household_count());
    AgentId c = make_agent(child_ages[next_child++], hh);
    const auto& parents = pop.household(hh).parents;
    if (parents[0] != kNoAgent) {
      pop.agent(c).mother = parents[0];
      pop.agent(parents[0]).parity++;
    }
  }

  // Schools for the currently school-aged; newcomers enroll as they age in.
  std::size_t pupils = 0;
  for (AgentId a = 0; a < pop.size(); ++a) {
    double age = pop.agent(a).age(0.0);
    if (age >= cfg.school_entry_age && age < cfg.school_exit_age) ++pupils;
  }
  int schools = cfg.school_count > 0
                    ? cfg.school_count
                    : std::max(1, static_cast<int>(std::ceil(
                                      pupils / cfg.school_size)));
  for (int i = 0; i < schools; ++i) pop.add_school();
  for (AgentId a = 0; a < pop.size(); ++a) {
    double age = pop.agent(a).age(0.0);
    if (age >= cfg.school_entry_age && age < cfg.school_exit_age) {
      pop.enroll_school(a, static_cast<int32_t>(rng.next_u64(
                               Stream::kInitialization) %
                           pop.school_count()));
    }
  }

  InitStats out;
  out.region = region;
  out.agents = pop.size();
  out.households = pop.household_count();
  out.schools = pop.school_count();
  return out;
}

// ---- aging / life-death chart -------------------------------------------

struct AgingChartOptions {
  double update_period = 1.0;  // periodic internal self-update
  ActionFn on_periodic;
  MessageKind death_message = 0;  // infection-fatality listener when nonzero
  ActionFn on_death;              // runs after the agent is withdrawn
  ActionFn on_infection_death;    // death-message arrow; falls back to on_death
  bool childbirth = false;        // direct-birth arrow (no gestation chart)
  ActionFn on_childbirth;
};

inline constexpr int kAgingAlive = 0;
inline constexpr int kAgingDead = 1;

// Two-state alive/dead chart: background mortality as a thinned rate arrow,
// optional death-by-message, a periodic self-update, and (optionally) the
// direct childbirth arrow used by packs without a gestation model.
inline ChartDefinition make_aging_chart(const DemographicsConfig& cfg,
                                        AgingChartOptions opts) {
  ChartDefinition chart("aging");
  int alive = chart.add_state("alive");
  int dead = chart.add_state("dead");
  chart.set_initial(alive);

  double h_max = cfg.mortality.max_hazard();
  HazardTable mortality = cfg.mortality;
  ActionFn on_death = opts.on_death;
  chart.add_transition(
      alive, dead, TriggerSpec::make_rate(h_max, Stream::kDemographics),
      [mortality, h_max](Simulation& s, AgentId a, double t) {
        double age = s.population().agent(a).age(t);
        return s.rng().uniform(Stream::kDemographics) * h_max <
               mortality.at(age);
      },
      [on_death](Simulation& s, AgentId a, double t) {
        s.kill(a);
        if (on_death) on_death(s, a, t);
      });

  if (opts.death_message != 0) {
    ActionFn on_fatal =
        opts.on_infection_death ? opts.on_infection_death : opts.on_death;
    chart.add_transition(alive, dead,
                         TriggerSpec::make_message(opts.death_message), {},
                         [on_fatal](Simulation& s, AgentId a, double t) {
                           s.kill(a);
                           if (on_fatal) on_fatal(s, a, t);
                         });
  }

  ActionFn periodic = opts.on_periodic;
  chart.add_transition(
      alive, alive,
      TriggerSpec::make_timeout(opts.update_period, Stream::kDemographics), {},
      periodic);

  if (opts.childbirth) {
    DemographicsConfig c = cfg;
    ActionFn birth = opts.on_childbirth;
    chart.add_transition(
        alive, alive,
        TriggerSpec::make_rate(
            [c](Simulation& s, AgentId a, double t) {
              return c.fertility_bound(s.population().agent(a).age(t));
            },
            Stream::kFertility),
        [c](Simulation& s, AgentId a, double t) {
          const PersonAgent& p = s.population().agent(a);
          double bound = c.fertility_bound(p.age(t));
          if (!(bound > 0.0)) return false;
          return s.rng().uniform(Stream::kFertility) * bound <
                 c.fertility_hazard(p.age(t), p.parity);
        },
        birth);
  }

  return chart;
}

// ---- gestation chart ------------------------------------------------------

struct FertilityStates {
  int not_pregnant = -1;
  int trimester1 = -1;
  int trimester2 = -1;
  int trimester3 = -1;
  int post_partum = -1;
};

// Five-state gestation cycle. Conception is a thinned hazard in maternal
// age and parity; the birth itself fires on the trimester3 -> postPartum
// arrow. `on_trimester3` runs at entry into the final trimester (the
// maternal-immunization window).
inline ChartDefinition make_fertility_chart(const DemographicsConfig& cfg,
                                            ActionFn on_trimester3,
                                            ActionFn on_birth,
                                            FertilityStates* states = nullptr) {
  ChartDefinition chart("fertility");
  int rest = chart.add_state("notPregnant");
  int t1 = chart.add_state("trimester1");
  int t2 = chart.add_state("trimester2");
  int t3 = chart.add_state("trimester3");
  int pp = chart.add_state("postPartum");
  chart.set_initial(rest);
  if (states) *states = FertilityStates{rest, t1, t2, t3, pp};

  DemographicsConfig c = cfg;
  chart.add_transition(
      rest, t1,
      TriggerSpec::make_rate(
          [c](Simulation& s, AgentId a, double t) {
            return c.fertility_bound(s.population().agent(a).age(t));
          },
          Stream::kFertility),
      [c](Simulation& s, AgentId a, double t) {
        const PersonAgent& p = s.population().agent(a);
        double bound = c.fertility_bound(p.age(t));
        if (!(bound > 0.0)) return false;
        return s.rng().uniform(Stream::kFertility) * bound <
               c.fertility_hazard(p.age(t), p.parity);
      });

  double tri = cfg.gestation_years / 3.0;
  chart.add_transition(t1, t2,
                       TriggerSpec::make_timeout(tri, Stream::kFertility));
  chart.add_transition(t2, t3,
                       TriggerSpec::make_timeout(tri, Stream::kFertility));
  if (on_trimester3) chart.set_entry(t3, std::move(on_trimester3));
  chart.add_transition(t3, pp,
                       TriggerSpec::make_timeout(tri, Stream::kFertility), {},
                       std::move(on_birth));
  chart.add_transition(
      pp, rest, TriggerSpec::make_timeout(cfg.postpartum_years,
                                          Stream::kFertility));
  return chart;
}

}  // namespace epichart
