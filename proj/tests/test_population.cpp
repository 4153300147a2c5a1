// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "epichart/population/demographics.hpp"

using namespace epichart;

TEST_CASE("grid neighbor queries match a brute-force scan") {
  Simulation sim(5, 0);
  Population& pop = sim.population();
  pop.configure_region(100.0, 80.0, 7.0);
  RngRegistry& r = sim.rng();

  std::vector<Vec2> where;
  for (int i = 0; i < 400; ++i) {
    Vec2 at{r.uniform(Stream::kInitialization, 0.0, 100.0),
            r.uniform(Stream::kInitialization, 0.0, 80.0)};
    HouseholdId hh = pop.create_household(at);
    pop.add_agent(Sex::kMale, 0.0, at, hh, true);
    where.push_back(at);
  }

  for (double radius : {0.0, 0.5, 3.0, 7.0, 25.0, 500.0}) {
    for (AgentId probe : {AgentId{0}, AgentId{13}, AgentId{399}}) {
      std::vector<AgentId> got =
          pop.neighbors_within(where[probe], radius, probe);
      std::sort(got.begin(), got.end());
      std::vector<AgentId> want;
      for (AgentId a = 0; a < where.size(); ++a) {
        if (a == probe) continue;
        if (dist2(where[a], where[probe]) <= radius * radius) {
          want.push_back(a);
        }
      }
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("radius zero finds exactly the co-located") {
  Simulation sim(6, 0);
  Population& pop = sim.population();
  pop.configure_region(50.0, 50.0, 5.0);
  Vec2 at{10.0, 10.0};
  HouseholdId hh = pop.create_household(at);
  AgentId a = pop.add_agent(Sex::kMale, 0.0, at, hh, true);
  AgentId b = pop.add_agent(Sex::kFemale, 0.0, at, hh, true);
  AgentId c = pop.add_agent(Sex::kFemale, 0.0, Vec2{10.1, 10.0},
                            pop.create_household(Vec2{10.1, 10.0}), true);
  (void)c;
  std::vector<AgentId> got = pop.neighbors_within(at, 0.0, a);
  REQUIRE(got == std::vector<AgentId>{b});
}

TEST_CASE("moving an agent updates the index") {
  Simulation sim(7, 0);
  Population& pop = sim.population();
  pop.configure_region(50.0, 50.0, 5.0);
  HouseholdId h1 = pop.create_household(Vec2{5.0, 5.0});
  HouseholdId h2 = pop.create_household(Vec2{45.0, 45.0});
  AgentId a = pop.add_agent(Sex::kMale, 0.0, Vec2{5.0, 5.0}, h1, true);
  AgentId b = pop.add_agent(Sex::kMale, 0.0, Vec2{45.0, 45.0}, h2, true);
  REQUIRE(pop.neighbors_within(Vec2{45.0, 45.0}, 1.0, b).empty());
  pop.move_agent(a, Vec2{45.0, 45.0});
  REQUIRE(pop.neighbors_within(Vec2{45.0, 45.0}, 1.0, b) ==
          std::vector<AgentId>{a});
  REQUIRE(pop.neighbors_within(Vec2{5.0, 5.0}, 1.0, kNoAgent).empty());
}

TEST_CASE("death bookkeeping is exact and ids are never reused") {
  Simulation sim(8, 0);
  Population& pop = sim.population();
  pop.configure_region(50.0, 50.0, 5.0);
  HouseholdId hh = pop.create_household(Vec2{1.0, 1.0});
  AgentId a = pop.add_agent(Sex::kMale, 0.0, Vec2{1.0, 1.0}, hh, true);
  AgentId b = pop.add_agent(Sex::kFemale, 0.0, Vec2{1.0, 1.0}, hh, true);
  REQUIRE(pop.alive_count() == 2);

  sim.run_until(4.0);
  sim.kill(a);
  REQUIRE(pop.alive_count() == 1);
  REQUIRE(pop.death_count() == 1);
  REQUIRE(pop.agent(a).death_time == 4.0);
  REQUIRE_THROWS_AS(sim.kill(a), std::logic_error);

  // Dead agents leave every index but keep their record.
  REQUIRE(pop.neighbors_within(Vec2{1.0, 1.0}, 1.0, b).empty());
  REQUIRE(pop.household(hh).members == std::vector<AgentId>{b});

  AgentId c = pop.add_agent(Sex::kMale, 4.0, Vec2{1.0, 1.0}, hh, false);
  REQUIRE(c == 2);  // fresh id, no reuse of a's slot
  REQUIRE(pop.alive_count() == 2);
  REQUIRE(pop.initial_count() == 2);
  REQUIRE(pop.birth_count() == 1);
  REQUIRE(pop.alive_count() ==
          pop.initial_count() + pop.birth_count() - pop.death_count());
}

TEST_CASE("life expectancy of a flat table is the analytic mean") {
  HazardTable flat{{0.0}, {0.02}};
  REQUIRE_THAT(life_expectancy(flat), Catch::Matchers::WithinAbs(50.0, 1e-9));
  HazardTable two{{0.0, 50.0}, {0.01, 0.1}};
  // (1-e^-0.5)/0.01 + e^-0.5/0.1
  REQUIRE_THAT(life_expectancy(two),
               Catch::Matchers::WithinAbs(45.412240625862944, 1e-9));
}

TEST_CASE("default mortality table gives a plausible life expectancy") {
  DemographicsConfig cfg;
  double e0 = life_expectancy(cfg.mortality);
  REQUIRE(e0 >= 70.0);
  REQUIRE(e0 <= 90.0);
}

TEST_CASE("hazard tables look up bands and bounds") {
  HazardTable t{{0.0, 10.0, 20.0}, {0.5, 0.1, 0.9}};
  REQUIRE(t.at(0.0) == 0.5);
  REQUIRE(t.at(9.999) == 0.5);
  REQUIRE(t.at(10.0) == 0.1);
  REQUIRE(t.at(25.0) == 0.9);
  REQUIRE(t.max_hazard() == 0.9);
  REQUIRE(t.max_from(0.0) == 0.9);
  REQUIRE(t.max_from(12.0) == 0.9);
  REQUIRE(t.max_from(21.0) == 0.9);
  HazardTable declining{{0.0, 10.0, 20.0}, {0.9, 0.5, 0.1}};
  REQUIRE(declining.max_from(5.0) == 0.9);
  REQUIRE(declining.max_from(10.0) == 0.5);
  REQUIRE(declining.max_from(50.0) == 0.1);
}

TEST_CASE("synthetic population satisfies its construction contracts") {
  Simulation sim(1234, 0);
  DemographicsConfig cfg;
  InitStats stats = init_population(sim, 20000, cfg, 5.0);
  Population& pop = sim.population();

  REQUIRE(stats.agents == 20000);
  REQUIRE(pop.alive_count() == 20000);
  REQUIRE(pop.initial_count() == 20000);
  REQUIRE(stats.households > 4000);
  REQUIRE(stats.schools >= 1);

  std::size_t urban = 0, females = 0, enrolled = 0, with_mother = 0;
  std::size_t school_aged = 0;
  double age_sum = 0.0;
  int attitudes[3] = {0, 0, 0};
  for (AgentId a = 0; a < pop.size(); ++a) {
    const PersonAgent& p = pop.agent(a);
    REQUIRE(p.alive);
    REQUIRE(p.household != kNoHousehold);
    // Household members share the household's exact address.
    REQUIRE(p.pos.x == pop.household(p.household).pos.x);
    REQUIRE(p.pos.y == pop.household(p.household).pos.y);
    double age = p.age(0.0);
    REQUIRE(age >= 0.0);
    REQUIRE(age < 105.0);
    age_sum += age;
    if (p.pos.x < stats.region.urban_width) ++urban;
    if (p.sex == Sex::kFemale) ++females;
    ++attitudes[static_cast<int>(p.attitude)];
    REQUIRE(p.acceptance >= 0.0f);
    REQUIRE(p.acceptance <= 1.0f);
    if (age >= cfg.school_entry_age && age < cfg.school_exit_age) {
      ++school_aged;
      if (p.school >= 0) ++enrolled;
    } else {
      REQUIRE(p.school < 0);
    }
    if (age < cfg.home_leaving_min) {
      if (p.mother != kNoAgent) {
        ++with_mother;
        REQUIRE(pop.agent(p.mother).age(0.0) - age >= 16.0);
        REQUIRE(pop.agent(p.mother).household == p.household);
      }
    }
  }
  double n = static_cast<double>(pop.size());
  REQUIRE(urban / n > 0.66);
  REQUIRE(urban / n < 0.74);
  REQUIRE(females / n > 0.47);
  REQUIRE(females / n < 0.53);
  REQUIRE(age_sum / n > 25.0);
  REQUIRE(age_sum / n < 50.0);
  REQUIRE(attitudes[0] / n > 0.62);
  REQUIRE(attitudes[0] / n < 0.68);
  REQUIRE(attitudes[1] / n > 0.27);
  REQUIRE(attitudes[1] / n < 0.33);
  REQUIRE(attitudes[2] / n > 0.035);
  REQUIRE(attitudes[2] / n < 0.065);
  REQUIRE(enrolled == school_aged);
  REQUIRE(with_mother > 0.8 * static_cast<double>(school_aged));

  // Every household has at least one member and a sane parent slot.
  for (HouseholdId h = 0; h < pop.household_count(); ++h) {
    REQUIRE_FALSE(pop.household(h).members.empty());
    REQUIRE(pop.household(h).parents[0] != kNoAgent);
  }

  // Same seed, same world.
  Simulation sim2(1234, 0);
  init_population(sim2, 20000, cfg, 5.0);
  std::ostringstream s1, s2;
  pop.write_snapshot(s1, 0.0);
  sim2.population().write_snapshot(s2, 0.0);
  REQUIRE(s1.str() == s2.str());

  // Different seed, different world.
  Simulation sim3(4321, 0);
  init_population(sim3, 20000, cfg, 5.0);
  std::ostringstream s3;
  sim3.population().write_snapshot(s3, 0.0);
  REQUIRE(s1.str() != s3.str());
}

TEST_CASE("large populations initialize in reasonable time") {
  Simulation sim(99, 0);
  DemographicsConfig cfg;
  InitStats stats = init_population(sim, 500000, cfg, 5.0);
  REQUIRE(stats.agents == 500000);
  REQUIRE(sim.population().alive_count() == 500000);
}

TEST_CASE("children enter school at six and leave at eighteen") {
  Simulation sim(55, 0);
  DemographicsConfig cfg;
  Population& pop = sim.population();
  pop.configure_region(100.0, 100.0, 10.0);
  pop.add_school();
  RegionLayout region{100.0, 100.0, 70.0, 0.7};
  LifeCourse life(sim, cfg, region);

  HouseholdId hh = pop.create_household(Vec2{3.0, 3.0});
  AgentId kid = pop.add_agent(Sex::kFemale, 0.0, Vec2{3.0, 3.0}, hh, true);
  life.attach(kid);

  sim.run_until(5.99);
  REQUIRE(pop.agent(kid).school < 0);
  sim.run_until(6.01);
  REQUIRE(pop.agent(kid).school >= 0);
  REQUIRE(pop.school(pop.agent(kid).school).enrolled.size() == 1);
  sim.run_until(18.01);
  REQUIRE(pop.agent(kid).school < 0);
  REQUIRE(pop.school(0).enrolled.empty());
}

TEST_CASE("young adults leave home and can pair into couples") {
  Simulation sim(56, 0);
  DemographicsConfig cfg;
  cfg.couple_fraction = 1.0;
  Population& pop = sim.population();
  pop.configure_region(100.0, 100.0, 10.0);
  RegionLayout region{100.0, 100.0, 70.0, 0.7};
  LifeCourse life(sim, cfg, region);

  HouseholdId parental = pop.create_household(Vec2{3.0, 3.0});
  AgentId boy = pop.add_agent(Sex::kMale, 0.0, Vec2{3.0, 3.0}, parental, true);
  AgentId girl =
      pop.add_agent(Sex::kFemale, 0.0, Vec2{3.0, 3.0}, parental, true);
  life.attach(boy);
  life.attach(girl);

  sim.run_until(cfg.home_leaving_max + 0.1);
  REQUIRE(pop.agent(boy).household != parental);
  REQUIRE(pop.agent(girl).household != parental);
  // couple_fraction 1 forces the second mover to join the first.
  REQUIRE(pop.agent(boy).household == pop.agent(girl).household);
  REQUIRE(pop.agent(boy).pos.x == pop.agent(girl).pos.x);
  REQUIRE(pop.household(parental).members.empty());
}

TEST_CASE("gestation chart spaces trimesters exactly and births fire") {
  Simulation sim(57, 0);
  DemographicsConfig cfg;
  cfg.fertility = HazardTable{{0.0}, {40.0}};  // conceive almost immediately
  cfg.parity_multipliers = {1.0};

  std::vector<double> marks;
  int births = 0;
  ChartDefinition def = make_fertility_chart(
      cfg,
      [&](Simulation& s, AgentId, double t) {
        marks.push_back(t);  // trimester3 entry
        (void)s;
      },
      [&](Simulation&, AgentId, double) { ++births; });

  Population& pop = sim.population();
  pop.configure_region(50.0, 50.0, 5.0);
  HouseholdId hh = pop.create_household(Vec2{1.0, 1.0});
  AgentId mom = pop.add_agent(Sex::kFemale, -25.0, Vec2{1.0, 1.0}, hh, true);
  uint16_t slot = sim.add_chart(mom, &def);

  std::vector<std::pair<int, double>> steps;
  sim.set_transition_observer(
      [&](AgentId, const ChartDefinition*, int, int to, double t) {
        steps.push_back({to, t});
      });
  sim.run_until(30.0);

  REQUIRE(births >= 1);
  REQUIRE(marks.size() >= 1);
  // Walk the first full cycle: conception, two trimester steps of exactly
  // gestation/3, birth, postpartum rest.
  REQUIRE(steps.size() >= 4);
  double conceived = steps[0].second;
  REQUIRE(steps[1].second == Catch::Approx(conceived + 0.25).margin(1e-12));
  REQUIRE(steps[2].second == Catch::Approx(conceived + 0.50).margin(1e-12));
  REQUIRE(steps[3].second == Catch::Approx(conceived + 0.75).margin(1e-12));
  REQUIRE(marks[0] == Catch::Approx(conceived + 0.50).margin(1e-12));
  REQUIRE(sim.state_of(mom, slot) >= 0);
}

TEST_CASE("fertility guard respects age bands and parity damping") {
  DemographicsConfig cfg;
  REQUIRE(cfg.fertility_hazard(10.0, 0) == 0.0);   // below first band
  REQUIRE(cfg.fertility_hazard(22.0, 0) == 0.066);
  REQUIRE(cfg.fertility_hazard(22.0, 2) == Catch::Approx(0.066 * 0.75));
  REQUIRE(cfg.fertility_hazard(22.0, 9) == 0.0);   // deep parity
  REQUIRE(cfg.fertility_hazard(50.0, 0) == 0.0);   // past last band
  REQUIRE(cfg.fertility_bound(22.0) == Catch::Approx(0.096));
  REQUIRE(cfg.fertility_bound(31.0) == Catch::Approx(0.084));
  REQUIRE(cfg.fertility_bound(47.0) == 0.0);
}

TEST_CASE("aging chart death follows the mortality table") {
  // A cohort of 70-year-olds under the default table: the chart thins the
  // 0.035 hazard out of the global maximum, so survival to 80 must track
  // exp(-0.35).
  Simulation sim(58, 0);
  DemographicsConfig cfg;
  ChartDefinition aging = make_aging_chart(cfg, AgingChartOptions{});
  Population& pop = sim.population();
  pop.configure_region(200.0, 200.0, 10.0);
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    HouseholdId hh = pop.create_household(Vec2{1.0, 1.0});
    AgentId a = pop.add_agent(Sex::kMale, -70.0, Vec2{1.0, 1.0}, hh, true);
    sim.add_chart(a, &aging);
  }
  sim.run_until(10.0);
  double survived =
      static_cast<double>(pop.alive_count()) / static_cast<double>(n);
  REQUIRE_THAT(survived,
               Catch::Matchers::WithinAbs(std::exp(-0.35), 0.025));
}

TEST_CASE("aging chart hears the infection-death message") {
  Simulation sim(59, 0);
  DemographicsConfig cfg;
  cfg.mortality = HazardTable{{0.0}, {1e-9}};  // keep background out
  constexpr MessageKind kFatal = 41;
  int deaths = 0;
  AgingChartOptions opts;
  opts.death_message = kFatal;
  opts.on_death = [&](Simulation&, AgentId, double) { ++deaths; };
  ChartDefinition aging = make_aging_chart(cfg, opts);

  Population& pop = sim.population();
  pop.configure_region(50.0, 50.0, 5.0);
  HouseholdId hh = pop.create_household(Vec2{1.0, 1.0});
  AgentId a = pop.add_agent(Sex::kMale, -30.0, Vec2{1.0, 1.0}, hh, true);
  sim.add_chart(a, &aging);
  sim.send_message(kNoAgent, a, kFatal, 2.0);
  sim.run_until(5.0);
  REQUIRE_FALSE(pop.agent(a).alive);
  REQUIRE(pop.agent(a).death_time == 2.0);
  REQUIRE(deaths == 1);
}

TEST_CASE("periodic self-update ticks once per period without state churn") {
  Simulation sim(60, 0);
  DemographicsConfig cfg;
  cfg.mortality = HazardTable{{0.0}, {1e-9}};
  int ticks = 0;
  AgingChartOptions opts;
  opts.on_periodic = [&](Simulation&, AgentId, double) { ++ticks; };
  ChartDefinition aging = make_aging_chart(cfg, opts);

  Population& pop = sim.population();
  pop.configure_region(50.0, 50.0, 5.0);
  HouseholdId hh = pop.create_household(Vec2{1.0, 1.0});
  AgentId a = pop.add_agent(Sex::kMale, 0.0, Vec2{1.0, 1.0}, hh, true);
  sim.add_chart(a, &aging);
  sim.run_until(10.5);
  REQUIRE(ticks == 10);
}

TEST_CASE("closed demography stays roughly stationary for decades") {
  Simulation sim(61, 0);
  DemographicsConfig cfg;
  InitStats stats = init_population(sim, 5000, cfg, 5.0);
  LifeCourse life(sim, cfg, stats.region);
  Population& pop = sim.population();

  LifeCourse* lifep = &life;
  AgingChartOptions male_opts;
  ChartDefinition aging_male = make_aging_chart(cfg, male_opts);
  AgingChartOptions female_opts;
  female_opts.childbirth = true;
  ChartDefinition* female_def_ptr = nullptr;
  ChartDefinition* male_def_ptr = &aging_male;
  female_opts.on_childbirth = [&, lifep](Simulation& s, AgentId mom, double) {
    AgentId kid = process_birth(s, mom, *lifep);
    s.add_chart(kid, s.population().agent(kid).sex == Sex::kFemale
                         ? female_def_ptr
                         : male_def_ptr);
  };
  ChartDefinition aging_female = make_aging_chart(cfg, female_opts);
  female_def_ptr = &aging_female;

  for (AgentId a = 0; a < pop.size(); ++a) {
    life.attach(a);
    sim.add_chart(a, pop.agent(a).sex == Sex::kFemale ? &aging_female
                                                      : &aging_male);
  }

  sim.run_until(60.0);
  REQUIRE(pop.alive_count() ==
          pop.initial_count() + pop.birth_count() - pop.death_count());
  double ratio = static_cast<double>(pop.alive_count()) / 5000.0;
  REQUIRE(ratio > 0.6);
  REQUIRE(ratio < 1.6);
  REQUIRE(pop.birth_count() > 1000);  // births really happen
  // Newborns inherited their mother's address and household.
  bool checked = false;
  for (AgentId a = 0; a < pop.size(); ++a) {
    const PersonAgent& p = pop.agent(a);
    if (p.birth_time > 0.0 && p.mother != kNoAgent && p.age(60.0) < 5.0) {
      const PersonAgent& m = pop.agent(p.mother);
      if (m.alive && p.alive && p.household == m.household) {
        REQUIRE(p.pos.x == m.pos.x);
        checked = true;
      }
    }
  }
  REQUIRE(checked);
}

TEST_CASE("config validation rejects malformed tables") {
  DemographicsConfig cfg;
  cfg.mortality = HazardTable{{0.0, 10.0}, {0.1, 0.0}};
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);  // open band 0
  cfg = DemographicsConfig{};
  cfg.mortality.edges = {0.0, 5.0, 3.0};
  cfg.mortality.hazards = {0.1, 0.1, 0.1};
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DemographicsConfig{};
  cfg.fertility.hazards[0] = -0.5;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DemographicsConfig{};
  cfg.urban_population_share = 1.5;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DemographicsConfig{};
  cfg.attitude_weights = {0.5, 0.5};
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DemographicsConfig{};
  REQUIRE_NOTHROW(cfg.validate());
}
