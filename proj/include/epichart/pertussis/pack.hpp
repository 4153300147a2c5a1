// Pertussis model pack: lazy-waned immunity on every agent, a two-state
// compliance chart steering the dose schedule, maternal immunization through
// the gestation chart, and a three-layer contact process (household, school,
// spatial background). One instance per realization; chart callbacks capture
// `this`, so construct it in place and do not move it.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "epichart/core/simulation.hpp"
#include "epichart/metrics/accumulators.hpp"
#include "epichart/metrics/events.hpp"
#include "epichart/pertussis/immunity.hpp"
#include "epichart/pertussis/params.hpp"
#include "epichart/population/demographics.hpp"
#include "epichart/statechart/chart.hpp"

namespace epichart::pertussis {

namespace inf {
inline constexpr int kAtRisk = 0;
inline constexpr int kLatent = 1;
inline constexpr int kInfectious = 2;
inline constexpr int kCount = 3;
}  // namespace inf

namespace cpl {
inline constexpr int kOnSchedule = 0;
inline constexpr int kNonCompliant = 1;
}  // namespace cpl

namespace msg {
inline constexpr MessageKind kExposure = 1;
}

// Chart slots, fixed by attach order. Females carry a fourth chart.
inline constexpr uint16_t kInfSlot = 0;
inline constexpr uint16_t kAgingSlot = 1;
inline constexpr uint16_t kComplianceSlot = 2;
inline constexpr uint16_t kFertilitySlot = 3;

inline constexpr int kMaxDoses = 8;

struct ProtectionSample {
  AgentId agent;
  double t;
  double active;
  double passive;
  double total;
};

class PertussisPack {
 public:
  PertussisPack(Simulation& sim, const PertussisParams& params,
                const DemographicsConfig& demo, EventLog* log = nullptr,
                ContactMatrix* contacts = nullptr)
      : sim_(sim),
        params_(params),
        demo_(demo),
        log_(log),
        contacts_(contacts),
        infection_("pertussisInfection"),
        compliance_("compliance"),
        fertility_("fertility"),
        aging_female_("aging"),
        aging_male_("aging") {
    params_.validate();
    demo_.validate();
    vaccine_memory_ = params_.vaccine_memory();
    dose_admin_.fill(0);
    build_infection();
    build_compliance();
    build_fertility_and_aging();
    dose_hook_ = sim_.register_hook(
        [this](Simulation& s, AgentId a, double t) { try_administer(s, a, t); });
    sample_hook_ = sim_.register_hook(
        [this](Simulation& s, AgentId a, double t) { take_sample(s, a, t); });
  }

  PertussisPack(const PertussisPack&) = delete;
  PertussisPack& operator=(const PertussisPack&) = delete;

  void init_world(uint64_t n) {
    double cell = std::max(4.0, params_.background_radius);
    InitStats stats = init_population(sim_, n, demo_, cell);
    life_.emplace(sim_, demo_, stats.region);

    Population& pop = sim_.population();
    for (AgentId a = 0; a < pop.size(); ++a) {
      attach_init(a);
      life_->attach(a);
    }

    if (params_.importation_rate > 0.0) {
      import_hook_ = sim_.register_hook(
          [this](Simulation& s, AgentId, double t) { run_importation(s, t); });
      sim_.schedule_hook(sim_.rng().exponential(Stream::kTransmission,
                                                params_.importation_rate),
                         import_hook_);
    }
  }

  // -- accessors --------------------------------------------------------------
  const PertussisParams& params() const { return params_; }
  const ChartDefinition& infection() const { return infection_; }
  const ChartDefinition& compliance() const { return compliance_; }
  const ChartDefinition& fertility() const { return fertility_; }
  const ChartDefinition& aging_female() const { return aging_female_; }
  const ChartDefinition& aging_male() const { return aging_male_; }

  const ImmunityState& immunity(AgentId a) const { return immunity_[a]; }
  double protection_of(AgentId a, double t) const {
    return immunity_[a].protection_at(t, params_.waning);
  }
  int doses_received(AgentId a) const { return doses_got_[a]; }
  // Age at which dose k landed, NaN if it never did.
  double dose_age(AgentId a, int k) const { return dose_age_[a][k]; }

  uint64_t true_cases() const { return true_cases_; }
  uint64_t reported_cases() const { return reported_cases_; }
  uint64_t doses_administered(int k) const { return dose_admin_[k]; }
  uint64_t maternal_doses() const { return maternal_doses_; }
  const std::vector<ProtectionSample>& samples() const { return samples_; }

  // Fraction of the living in-run-born cohort aged >= audit_age that had
  // dose k on board by audit_age.
  double dose_coverage(int k, double audit_age, double now) const {
    const Population& pop = sim_.population();
    uint64_t cohort = 0;
    uint64_t covered = 0;
    for (AgentId a = 0; a < pop.size(); ++a) {
      const PersonAgent& p = pop.agent(a);
      if (!p.alive || p.birth_time < 0.0 || p.age(now) < audit_age) continue;
      ++cohort;
      double da = dose_age_[a][k];
      if (!std::isnan(da) && da <= audit_age + 1e-9) ++covered;
    }
    return cohort > 0 ? static_cast<double>(covered) / cohort
                      : std::numeric_limits<double>::quiet_NaN();
  }

  // Household-effective acceptance: min over the household's living founding
  // adults, the agent's own when there are none.
  double household_acceptance(AgentId a) const {
    const Population& pop = sim_.population();
    const PersonAgent& p = pop.agent(a);
    double u = p.acceptance;
    if (p.household != kNoHousehold) {
      bool found = false;
      double best = 1.0;
      for (AgentId q : pop.household(p.household).parents) {
        if (q == kNoAgent || !pop.agent(q).alive) continue;
        double qa = pop.agent(q).acceptance;
        best = found ? std::min(best, qa) : qa;
        found = true;
      }
      if (found) u = best;
    }
    return u;
  }

  bool maternal_active(double t) const {
    return params_.maternal_program_enabled &&
           t >= params_.maternal_program_start - 1e-12;
  }

  // Early doses are blunted only while maternal antibodies are measurably
  // present at administration time.
  static bool blunting_applies(const ImmunityState& im, double t,
                               const PertussisParams& p) {
    return p.blunting_enabled &&
           im.passive_at(t, p.waning) > p.passive_present_threshold;
  }

  std::array<uint64_t, inf::kCount> occupancy() const {
    std::array<uint64_t, inf::kCount> out{};
    const Population& pop = sim_.population();
    for (AgentId a = 0; a < pop.size(); ++a) {
      if (!pop.agent(a).alive) continue;
      out[static_cast<std::size_t>(pop.agent(a).charts[kInfSlot].state)]++;
    }
    return out;
  }

 private:
  void ensure_agent(AgentId a) {
    if (immunity_.size() <= a) {
      std::size_t n = a + 1;
      immunity_.resize(n);
      next_dose_.resize(n, 0);
      doses_got_.resize(n, 0);
      std::array<float, kMaxDoses> blank;
      blank.fill(std::numeric_limits<float>::quiet_NaN());
      dose_age_.resize(n, blank);
    }
  }

  // -- dosing -------------------------------------------------------------------

  void try_administer(Simulation& s, AgentId a, double t) {
    Population& pop = s.population();
    const PersonAgent& p = pop.agent(a);
    if (!p.alive) return;
    if (p.charts.size() <= kComplianceSlot ||
        p.charts[kComplianceSlot].state != cpl::kOnSchedule) {
      return;
    }
    double age = p.age(t);
    uint8_t& next = next_dose_[a];
    const auto& sched = params_.schedule;
    while (next < sched.size() && age >= sched[next] - 1e-9) {
      if (age <= sched[next] + params_.catch_up_window) {
        administer_dose(s, a, t, next);
      }
      ++next;
    }
  }

  void administer_dose(Simulation& s, AgentId a, double t, int k) {
    ImmunityState& im = immunity_[a];
    bool blunt =
        k < params_.blunting_dose_cutoff && blunting_applies(im, t, params_);
    apply_dose(im, t, params_.dose_targets[k], vaccine_memory_, params_.waning,
               blunt, params_.blunting);
    ++doses_got_[a];
    dose_age_[a][k] =
        static_cast<float>(t - s.population().agent(a).birth_time);
    ++dose_admin_[k];
  }

  // -- exposure and contacts -------------------------------------------------------

  void contact(Simulation& s, AgentId src, AgentId dst, double t) {
    if (contacts_) {
      contacts_->record(s.population().agent(src).age(t),
                        s.population().agent(dst).age(t));
    }
    s.send_message(src, dst, msg::kExposure);
  }

  void contact_household(Simulation& s, AgentId a, double t) {
    Population& pop = s.population();
    const PersonAgent& p = pop.agent(a);
    if (p.household == kNoHousehold) return;
    scratch_.clear();
    for (AgentId b : pop.household(p.household).members) {
      if (b != a && pop.agent(b).alive) scratch_.push_back(b);
    }
    if (scratch_.empty()) return;
    contact(s, a,
            scratch_[s.rng().next_u64(Stream::kTransmission) % scratch_.size()],
            t);
  }

  void contact_school(Simulation& s, AgentId a, double t) {
    Population& pop = s.population();
    const PersonAgent& p = pop.agent(a);
    if (p.school < 0) return;
    scratch_.clear();
    for (AgentId b : pop.school(p.school).enrolled) {
      if (b != a && pop.agent(b).alive) scratch_.push_back(b);
    }
    if (scratch_.empty()) return;
    contact(s, a,
            scratch_[s.rng().next_u64(Stream::kTransmission) % scratch_.size()],
            t);
  }

  void contact_background(Simulation& s, AgentId a, double t) {
    Population& pop = s.population();
    pop.neighbors_within(pop.agent(a).pos, params_.background_radius, a,
                         scratch_);
    if (scratch_.empty()) return;
    contact(s, a,
            scratch_[s.rng().next_u64(Stream::kTransmission) % scratch_.size()],
            t);
  }

  void run_importation(Simulation& s, double t) {
    Population& pop = s.population();
    if (pop.alive_count() > 0) {
      for (int tries = 0; tries < 64; ++tries) {
        AgentId a = static_cast<AgentId>(
            s.rng().next_u64(Stream::kTransmission) % pop.size());
        if (pop.agent(a).alive) {
          s.send_message(kNoAgent, a, msg::kExposure);
          if (log_) {
            log_->record(LogEvent::kImportation, a, t, pop.agent(a).age(t));
          }
          break;
        }
      }
    }
    sim_.schedule_hook(
        t + s.rng().exponential(Stream::kTransmission,
                                params_.importation_rate),
        import_hook_);
  }

  // -- sampling ---------------------------------------------------------------------

  void maybe_sample(AgentId child, double t) {
    if (sampled_count_ >= params_.sample_infants ||
        t < params_.sample_start) {
      return;
    }
    ++sampled_count_;
    int n = static_cast<int>(
        std::ceil(params_.sample_years * params_.samples_per_year));
    for (int i = 0; i <= n; ++i) {
      sim_.schedule_hook(t + i / params_.samples_per_year, sample_hook_,
                         child);
    }
  }

  void take_sample(Simulation& s, AgentId a, double t) {
    if (!s.population().agent(a).alive) return;
    const ImmunityState& im = immunity_[a];
    samples_.push_back(ProtectionSample{
        a, t, im.active_at(t, params_.waning), im.passive_at(t, params_.waning),
        im.protection_at(t, params_.waning)});
  }

  // -- attach -----------------------------------------------------------------------

  void attach_newborn(Simulation& s, AgentId mother, double t) {
    AgentId child = process_birth(s, mother, *life_);
    ensure_agent(child);
    if (params_.passive_transfer_enabled) {
      transfer_maternal(immunity_[child], t,
                        immunity_[mother].protection_at(t, params_.waning),
                        params_.transfer_fraction);
    }
    const PersonAgent& p = s.population().agent(child);
    sim_.add_chart(child, &infection_, inf::kAtRisk);
    sim_.add_chart(child,
                   p.sex == Sex::kFemale ? &aging_female_ : &aging_male_);
    sim_.add_chart(child, &compliance_);
    if (p.sex == Sex::kFemale) sim_.add_chart(child, &fertility_);
    for (double due : params_.schedule) {
      sim_.schedule_hook(t + due, dose_hook_, child);
    }
    maybe_sample(child, t);
    if (log_) log_->record(LogEvent::kBirth, child, t, 0.0);
  }

  void attach_init(AgentId a) {
    ensure_agent(a);
    Population& pop = sim_.population();
    RngRegistry& rng = sim_.rng();
    const PersonAgent& p = pop.agent(a);
    double age = p.age(sim_.now());

    // Synthetic immune history; burn-in re-equilibrates it.
    if (rng.bernoulli(Stream::kInitialization,
                      1.0 - std::exp(-params_.init_foi * age))) {
      ImmunityState& im = immunity_[a];
      im.p_active = rng.uniform(Stream::kInitialization,
                                params_.init_active_lo, params_.init_active_hi);
      im.t_active = 0.0;
      im.memory = MemoryType::kNatural;
    }
    // Past doses belong to that unobserved history: start the schedule at
    // the first dose still ahead of this agent.
    uint8_t next = 0;
    while (next < params_.schedule.size() &&
           age >= params_.schedule[next] - 1e-9) {
      ++next;
    }
    next_dose_[a] = next;

    int start = inf::kAtRisk;
    if (rng.bernoulli(Stream::kInitialization, params_.seed_prevalence)) {
      start = inf::kInfectious;
    }
    sim_.add_chart(a, &infection_, start);
    sim_.add_chart(a, p.sex == Sex::kFemale ? &aging_female_ : &aging_male_);
    sim_.add_chart(a, &compliance_);
    if (p.sex == Sex::kFemale) sim_.add_chart(a, &fertility_);
    for (std::size_t k = next; k < params_.schedule.size(); ++k) {
      sim_.schedule_hook(p.birth_time + params_.schedule[k], dose_hook_, a);
    }
  }

  // -- chart construction --------------------------------------------------------------

  void build_infection() {
    ChartDefinition& c = infection_;
    int at_risk = c.add_state("atRisk");
    int latent = c.add_state("latent");
    int infectious = c.add_state("infectious");
    c.set_initial(at_risk);
    if (infectious != inf::kInfectious) {
      throw std::logic_error("infection state order drifted");
    }

    const PertussisParams& p = params_;

    // Exposure: the threshold test is deterministic, the transmission coin
    // is drawn only when the target is actually at risk.
    c.add_transition(
        at_risk, latent, TriggerSpec::make_message(msg::kExposure),
        [this](Simulation& s, AgentId a, double t) {
          double prot = immunity_[a].protection_at(t, params_.waning);
          if (prot >= params_.alpha.at(s.population().agent(a).age(t))) {
            return false;
          }
          return s.rng().bernoulli(Stream::kTransmission,
                                   params_.p_transmission);
        });

    c.set_entry(latent, [this](Simulation& s, AgentId a, double t) {
      ++true_cases_;
      double age = s.population().agent(a).age(t);
      if (log_) log_->record(LogEvent::kInfection, a, t, age);
      if (s.rng().bernoulli(Stream::kTransmission,
                            params_.ascertainment.at(age))) {
        ++reported_cases_;
        if (log_) log_->record(LogEvent::kAscertainedCase, a, t, age);
      }
    });

    c.add_transition(latent, infectious,
                     TriggerSpec::make_timeout(p.latent_duration,
                                               Stream::kTransmission));

    c.add_transition(
        infectious, infectious,
        TriggerSpec::make_rate(p.household_contact_rate, Stream::kTransmission),
        {},
        [this](Simulation& s, AgentId a, double t) {
          contact_household(s, a, t);
        });
    c.add_transition(
        infectious, infectious,
        TriggerSpec::make_rate(
            [p](Simulation& s, AgentId a, double) {
              return s.population().agent(a).school >= 0
                         ? p.school_contact_rate
                         : 0.0;
            },
            Stream::kTransmission),
        {},
        [this](Simulation& s, AgentId a, double t) { contact_school(s, a, t); });
    c.add_transition(
        infectious, infectious,
        TriggerSpec::make_rate(p.background_contact_rate,
                               Stream::kTransmission),
        {},
        [this](Simulation& s, AgentId a, double t) {
          contact_background(s, a, t);
        });

    // Recovery boosts active protection to full with slow natural memory.
    c.add_transition(infectious, at_risk,
                     TriggerSpec::make_timeout(p.infectious_duration,
                                               Stream::kTransmission),
                     {},
                     [this](Simulation& s, AgentId a, double t) {
                       apply_recovery(immunity_[a], t);
                       if (log_) {
                         log_->record(LogEvent::kRecovery, a, t,
                                      s.population().agent(a).age(t));
                       }
                     });
  }

  void build_compliance() {
    ChartDefinition& c = compliance_;
    int on = c.add_state("onSchedule");
    int off = c.add_state("nonCompliant");
    c.set_initial(on);

    // Re-entering the schedule catches up everything still inside its
    // window; the entry hook also runs at attach, where nothing is due yet.
    c.set_entry(on, [this](Simulation& s, AgentId a, double t) {
      try_administer(s, a, t);
    });

    c.add_transition(
        on, off,
        TriggerSpec::make_rate(
            [this](Simulation&, AgentId a, double) {
              return params_.compliance_out_scale *
                     (1.0 - household_acceptance(a));
            },
            Stream::kCompliance));
    c.add_transition(
        off, on,
        TriggerSpec::make_rate(
            [this](Simulation&, AgentId a, double) {
              return params_.compliance_in_scale * household_acceptance(a);
            },
            Stream::kCompliance));
  }

  void build_fertility_and_aging() {
    fertility_ = make_fertility_chart(
        demo_,
        /*on_trimester3=*/
        [this](Simulation& s, AgentId mother, double t) {
          if (!maternal_active(t)) return;
          if (!s.rng().bernoulli(Stream::kVaccination,
                                 params_.maternal_coverage)) {
            return;
          }
          apply_dose(immunity_[mother], t, params_.maternal_dose_target,
                     vaccine_memory_, params_.waning, /*blunt=*/false,
                     params_.blunting);
          ++maternal_doses_;
          if (log_) {
            log_->record(LogEvent::kMaternalDose, mother, t,
                         s.population().agent(mother).age(t));
          }
        },
        /*on_birth=*/
        [this](Simulation& s, AgentId mother, double t) {
          attach_newborn(s, mother, t);
        });

    AgingChartOptions opts;
    opts.on_death = [this](Simulation& s, AgentId a, double t) {
      if (log_) {
        log_->record(LogEvent::kDeath, a, t, s.population().agent(a).age(t));
      }
    };
    aging_female_ = make_aging_chart(demo_, opts);
    aging_male_ = make_aging_chart(demo_, opts);
  }

  Simulation& sim_;
  PertussisParams params_;
  DemographicsConfig demo_;
  EventLog* log_ = nullptr;
  ContactMatrix* contacts_ = nullptr;
  MemoryType vaccine_memory_ = MemoryType::kAcellular;

  ChartDefinition infection_;
  ChartDefinition compliance_;
  ChartDefinition fertility_;
  ChartDefinition aging_female_;
  ChartDefinition aging_male_;
  std::optional<LifeCourse> life_;
  uint16_t dose_hook_ = 0;
  uint16_t sample_hook_ = 0;
  uint16_t import_hook_ = 0;

  std::vector<ImmunityState> immunity_;
  std::vector<uint8_t> next_dose_;
  std::vector<uint8_t> doses_got_;
  std::vector<std::array<float, kMaxDoses>> dose_age_;
  std::vector<AgentId> scratch_;
  std::vector<ProtectionSample> samples_;
  uint32_t sampled_count_ = 0;

  uint64_t true_cases_ = 0;
  uint64_t reported_cases_ = 0;
  uint64_t maternal_doses_ = 0;
  std::array<uint64_t, kMaxDoses> dose_admin_{};
};

}  // namespace epichart::pertussis
