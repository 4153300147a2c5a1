// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "epichart/core/simulation.hpp"

using namespace epichart;

namespace {

AgentId spawn(Simulation& sim, Sex sex = Sex::kFemale) {
  Population& pop = sim.population();
  HouseholdId hh = pop.create_household(Vec2{50.0, 50.0});
  return pop.add_agent(sex, sim.now(), Vec2{50.0, 50.0}, hh, true);
}

Simulation make_sim(uint64_t seed = 11, uint64_t realization = 0) {
  Simulation sim(seed, realization);
  sim.population().configure_region(100.0, 100.0, 10.0);
  return sim;
}

// Kolmogorov-Smirnov statistic against a reference CDF.
double ks_statistic(std::vector<double> xs,
                    const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

// sqrt(n) * D below this passes at the 1% level.
constexpr double kKs01 = 1.628;

}  // namespace

TEST_CASE("timeout chain fires at exact absolute times") {
  Simulation sim = make_sim();
  ChartDefinition def("chain");
  int a = def.add_state("a");
  int b = def.add_state("b");
  int c = def.add_state("c");
  def.set_initial(a);
  def.add_transition(a, b, TriggerSpec::make_timeout(1.0, Stream::kDemographics));
  def.add_transition(b, c, TriggerSpec::make_timeout(0.5, Stream::kDemographics));

  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);

  std::vector<double> times;
  sim.set_transition_observer(
      [&](AgentId, const ChartDefinition*, int, int, double t) {
        times.push_back(t);
      });

  sim.run_until(0.99);
  REQUIRE(sim.state_of(id, slot) == a);
  sim.run_until(1.0);
  REQUIRE(sim.state_of(id, slot) == b);
  sim.run_until(10.0);
  REQUIRE(sim.state_of(id, slot) == c);
  REQUIRE(times == std::vector<double>{1.0, 1.5});
  REQUIRE(sim.now() == 10.0);
}

TEST_CASE("exit, entry, observer, action run in that order") {
  Simulation sim = make_sim();
  std::vector<std::string> trace;
  ChartDefinition def("order");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  def.set_exit(a, [&](Simulation&, AgentId, double) { trace.push_back("exit a"); });
  def.set_entry(b, [&](Simulation&, AgentId, double) { trace.push_back("enter b"); });
  def.add_transition(a, b, TriggerSpec::make_timeout(1.0, Stream::kDemographics),
                     {}, [&](Simulation&, AgentId, double) {
                       trace.push_back("action");
                     });

  AgentId id = spawn(sim);
  sim.add_chart(id, &def);
  sim.set_transition_observer(
      [&](AgentId, const ChartDefinition*, int, int, double) {
        trace.push_back("observe");
      });
  sim.run_until(2.0);
  REQUIRE(trace == std::vector<std::string>{"exit a", "enter b", "observe",
                                            "action"});
}

TEST_CASE("entry hook runs before the new state's triggers arm") {
  Simulation sim = make_sim();
  std::map<AgentId, double> planned;
  ChartDefinition def("entry-then-arm");
  int a = def.add_state("a");
  int b = def.add_state("b");
  int c = def.add_state("c");
  def.set_initial(a);
  def.set_entry(b, [&](Simulation&, AgentId id, double) {
    planned[id] = 0.25;
  });
  def.add_transition(a, b, TriggerSpec::make_timeout(1.0, Stream::kDemographics));
  def.add_transition(
      b, c,
      TriggerSpec::make_timeout(
          [&](Simulation&, AgentId id, double) {
            auto it = planned.find(id);
            return it == planned.end() ? 99.0 : it->second;
          },
          Stream::kDemographics));

  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  sim.run_until(1.3);
  REQUIRE(sim.state_of(id, slot) == c);
}

TEST_CASE("rate trigger samples an exponential first-passage time") {
  Simulation sim = make_sim(2025);
  ChartDefinition def("exp");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  const double lambda = 2.0;
  def.add_transition(a, b, TriggerSpec::make_rate(lambda, Stream::kTransmission));

  const int n = 2000;
  std::vector<AgentId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(spawn(sim));
  std::vector<double> times;
  sim.set_transition_observer(
      [&](AgentId, const ChartDefinition*, int, int, double t) {
        times.push_back(t);
      });
  for (AgentId id : ids) sim.add_chart(id, &def);
  sim.run_until(50.0);

  REQUIRE(times.size() == n);
  double d = ks_statistic(
      times, [&](double x) { return 1.0 - std::exp(-lambda * x); });
  REQUIRE(std::sqrt(static_cast<double>(n)) * d < kKs01);
}

TEST_CASE("guard rejection on a rate trigger thins to the target hazard") {
  Simulation sim = make_sim(77);
  ChartDefinition def("thinning");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  // Bound 4.0 accepted with probability 1/4: the accepted process must be
  // indistinguishable from a plain hazard of 1.0.
  def.add_transition(a, b, TriggerSpec::make_rate(4.0, Stream::kTransmission),
                     [](Simulation& s, AgentId, double) {
                       return s.rng().uniform(Stream::kTransmission) < 0.25;
                     });

  const int n = 2000;
  std::vector<AgentId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(spawn(sim));
  std::vector<double> times;
  sim.set_transition_observer(
      [&](AgentId, const ChartDefinition*, int, int, double t) {
        times.push_back(t);
      });
  for (AgentId id : ids) sim.add_chart(id, &def);
  sim.run_until(200.0);

  REQUIRE(times.size() == n);
  double d =
      ks_statistic(times, [](double x) { return 1.0 - std::exp(-x); });
  REQUIRE(std::sqrt(static_cast<double>(n)) * d < kKs01);
}

TEST_CASE("guard rejection on a timeout discards the one-shot") {
  Simulation sim = make_sim();
  ChartDefinition def("oneshot");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  int guard_calls = 0;
  def.add_transition(a, b, TriggerSpec::make_timeout(1.0, Stream::kDemographics),
                     [&](Simulation&, AgentId, double) {
                       ++guard_calls;
                       return false;
                     });
  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  uint64_t events = sim.run_until(50.0);
  REQUIRE(sim.state_of(id, slot) == a);
  REQUIRE(guard_calls == 1);  // no re-arm, no busy loop
  REQUIRE(events == 1);
}

TEST_CASE("self-transition runs its action without resetting siblings") {
  Simulation sim = make_sim();
  ChartDefinition def("tick");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  int ticks = 0;
  def.add_transition(a, a, TriggerSpec::make_timeout(1.0, Stream::kDemographics),
                     {}, [&](Simulation&, AgentId, double) { ++ticks; });
  def.add_transition(a, b, TriggerSpec::make_timeout(3.5, Stream::kDemographics));

  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  sim.run_until(100.0);
  // Were the self-loop a full transition, the 3.5-timeout would reset at
  // every tick and b would never be reached.
  REQUIRE(sim.state_of(id, slot) == b);
  REQUIRE(ticks == 3);
}

TEST_CASE("self-transition preserves the accrual epoch") {
  Simulation sim = make_sim();
  ChartDefinition def("epoch");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  def.set_accrual_tag(a, 7);
  def.add_transition(a, a, TriggerSpec::make_timeout(1.0, Stream::kDemographics));
  def.add_transition(a, b, TriggerSpec::make_timeout(2.5, Stream::kDemographics));

  std::vector<std::array<double, 2>> epochs;
  sim.set_accrual_sink([&](AgentId, int tag, double enter, double exit) {
    REQUIRE(tag == 7);
    epochs.push_back({enter, exit});
  });
  AgentId id = spawn(sim);
  sim.add_chart(id, &def);
  sim.run_until(10.0);
  REQUIRE(epochs.size() == 1);
  REQUIRE(epochs[0][0] == 0.0);
  REQUIRE(epochs[0][1] == 2.5);
}

TEST_CASE("leaving a state cancels its other pending triggers") {
  Simulation sim = make_sim();
  ChartDefinition def("race");
  int a = def.add_state("a");
  int b = def.add_state("b");
  int c = def.add_state("c");
  def.set_initial(a);
  def.add_transition(a, b, TriggerSpec::make_timeout(1.0, Stream::kDemographics));
  def.add_transition(a, c, TriggerSpec::make_timeout(2.0, Stream::kDemographics));

  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  sim.run_until(10.0);
  REQUIRE(sim.state_of(id, slot) == b);
  REQUIRE(sim.stale_dropped() == 1);  // the loser surfaced and was discarded
}

TEST_CASE("message trigger fires only on its kind and guard") {
  Simulation sim = make_sim();
  constexpr MessageKind kPing = 7;
  constexpr MessageKind kOther = 8;
  ChartDefinition def("msg");
  int s = def.add_state("s");
  int t = def.add_state("t");
  def.set_initial(s);
  AgentId friend_id = 0;
  def.add_transition(s, t, TriggerSpec::make_message(kPing),
                     [&](Simulation& sm, AgentId, double) {
                       return sm.current_sender() == friend_id;
                     });

  AgentId sender = spawn(sim);
  AgentId stranger = spawn(sim);
  AgentId receiver = spawn(sim);
  friend_id = sender;
  uint16_t slot = sim.add_chart(receiver, &def);

  sim.send_message(stranger, receiver, kPing, 1.0);
  sim.send_message(sender, receiver, kOther, 2.0);
  sim.run_until(5.0);
  REQUIRE(sim.state_of(receiver, slot) == s);  // wrong sender, wrong kind

  sim.send_message(sender, receiver, kPing, 1.0);
  sim.run_until(10.0);
  REQUIRE(sim.state_of(receiver, slot) == t);
}

TEST_CASE("messages reach every chart of the recipient") {
  Simulation sim = make_sim();
  constexpr MessageKind kPulse = 3;
  ChartDefinition def1("first");
  ChartDefinition def2("second");
  for (ChartDefinition* d : {&def1, &def2}) {
    int u = d->add_state("u");
    int v = d->add_state("v");
    d->set_initial(u);
    d->add_transition(u, v, TriggerSpec::make_message(kPulse));
  }
  AgentId id = spawn(sim);
  uint16_t s1 = sim.add_chart(id, &def1);
  uint16_t s2 = sim.add_chart(id, &def2);
  sim.send_message(kNoAgent, id, kPulse, 1.0);
  sim.run_until(2.0);
  REQUIRE(sim.state_of(id, s1) == 1);
  REQUIRE(sim.state_of(id, s2) == 1);
}

TEST_CASE("one message fires at most one transition per chart") {
  Simulation sim = make_sim();
  constexpr MessageKind kPulse = 3;
  ChartDefinition def("twice");
  int u = def.add_state("u");
  int v = def.add_state("v");
  def.set_initial(u);
  // Both arrows match; only the first may consume the message.
  def.add_transition(u, v, TriggerSpec::make_message(kPulse));
  def.add_transition(u, u, TriggerSpec::make_message(kPulse));
  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  int fired = 0;
  sim.set_transition_observer(
      [&](AgentId, const ChartDefinition*, int, int, double) { ++fired; });
  sim.send_message(kNoAgent, id, kPulse, 1.0);
  sim.run_until(2.0);
  REQUIRE(sim.state_of(id, slot) == v);
  REQUIRE(fired == 1);
}

TEST_CASE("message to a dead agent lands in the dead-letter count") {
  Simulation sim = make_sim();
  AgentId id = spawn(sim);
  sim.send_message(kNoAgent, id, 1, 1.0);
  sim.kill(id);
  sim.run_until(2.0);
  REQUIRE(sim.dead_letter_count() == 1);
}

TEST_CASE("condition triggers fire only via notify") {
  Simulation sim = make_sim();
  bool flag = false;
  ChartDefinition def("cond");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  def.add_transition(a, b, TriggerSpec::make_condition(
                               [&](Simulation&, AgentId, double) {
                                 return flag;
                               }));
  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);

  sim.run_until(5.0);
  REQUIRE(sim.state_of(id, slot) == a);
  flag = true;
  sim.run_until(10.0);  // still nothing re-checks spontaneously
  REQUIRE(sim.state_of(id, slot) == a);
  sim.notify(id);
  REQUIRE(sim.state_of(id, slot) == b);
}

TEST_CASE("kill cancels pending transitions and freezes state") {
  Simulation sim = make_sim();
  ChartDefinition def("mortal");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  def.add_transition(a, b, TriggerSpec::make_timeout(1.0, Stream::kDemographics));
  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  sim.run_until(0.5);
  sim.kill(id);
  sim.run_until(5.0);
  REQUIRE(sim.state_of(id, slot) == a);
  REQUIRE(sim.stale_dropped() == 1);
  REQUIRE_FALSE(sim.population().agent(id).alive);
}

TEST_CASE("kill closes the open accrual epoch at death time") {
  Simulation sim = make_sim();
  ChartDefinition def("hospice");
  int a = def.add_state("a");
  def.set_initial(a);
  def.set_accrual_tag(a, 2);
  std::vector<std::array<double, 2>> epochs;
  sim.set_accrual_sink([&](AgentId, int, double enter, double exit) {
    epochs.push_back({enter, exit});
  });
  AgentId id = spawn(sim);
  sim.add_chart(id, &def);
  sim.run_until(3.25);
  sim.kill(id);
  REQUIRE(epochs.size() == 1);
  REQUIRE(epochs[0][0] == 0.0);
  REQUIRE(epochs[0][1] == 3.25);
}

TEST_CASE("zero rate disables an arrow outright") {
  Simulation sim = make_sim();
  ChartDefinition def("off");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  def.add_transition(a, b, TriggerSpec::make_rate(0.0, Stream::kDemographics));
  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  REQUIRE(sim.run_until(100.0) == 0);
  REQUIRE(sim.state_of(id, slot) == a);
}

TEST_CASE("negative hazards and timeouts are rejected") {
  Simulation sim = make_sim();
  ChartDefinition bad_rate("bad-rate");
  int a = bad_rate.add_state("a");
  int b = bad_rate.add_state("b");
  bad_rate.set_initial(a);
  bad_rate.add_transition(
      a, b,
      TriggerSpec::make_rate(
          [](Simulation&, AgentId, double) { return -1.0; },
          Stream::kDemographics));
  AgentId id = spawn(sim);
  REQUIRE_THROWS_AS(sim.add_chart(id, &bad_rate), std::logic_error);

  ChartDefinition bad_timeout("bad-timeout");
  int c = bad_timeout.add_state("c");
  int d = bad_timeout.add_state("d");
  bad_timeout.set_initial(c);
  bad_timeout.add_transition(c, d,
                             TriggerSpec::make_timeout(-0.5, Stream::kDemographics));
  REQUIRE_THROWS_AS(sim.add_chart(id, &bad_timeout), std::logic_error);
}

TEST_CASE("clock refuses to run backwards") {
  Simulation sim = make_sim();
  sim.run_until(5.0);
  REQUIRE_THROWS_AS(sim.run_until(4.0), std::logic_error);
  REQUIRE_THROWS_AS(sim.send_message(kNoAgent, 0, 1, -1.0), std::logic_error);
}

TEST_CASE("hooks fire for their subject at the requested time") {
  Simulation sim = make_sim();
  AgentId id = spawn(sim);
  std::vector<std::pair<AgentId, double>> calls;
  uint16_t h = sim.register_hook([&](Simulation&, AgentId a, double t) {
    calls.push_back({a, t});
  });
  sim.schedule_hook(2.0, h, id);
  sim.schedule_hook(1.0, h);
  REQUIRE_THROWS_AS(sim.schedule_hook(1.0, static_cast<uint16_t>(h + 1), id),
                    std::logic_error);
  sim.run_until(3.0);
  REQUIRE(calls.size() == 2);
  REQUIRE(calls[0] == std::pair<AgentId, double>{kNoAgent, 1.0});
  REQUIRE(calls[1] == std::pair<AgentId, double>{id, 2.0});
}

TEST_CASE("actions may spawn agents that reallocate storage") {
  Simulation sim = make_sim();
  ChartDefinition def("spawner");
  int a = def.add_state("a");
  int b = def.add_state("b");
  def.set_initial(a);
  def.add_transition(a, b, TriggerSpec::make_timeout(1.0, Stream::kDemographics),
                     {}, [](Simulation& s, AgentId, double) {
                       for (int i = 0; i < 4096; ++i) spawn(s);
                     });
  AgentId id = spawn(sim);
  uint16_t slot = sim.add_chart(id, &def);
  sim.run_until(2.0);
  REQUIRE(sim.state_of(id, slot) == b);
  REQUIRE(sim.population().size() == 4097);
}

TEST_CASE("statechart definitions render to dot") {
  ChartDefinition def("render");
  int a = def.add_state("idle");
  int b = def.add_state("busy");
  def.set_initial(a);
  def.add_transition(a, b, TriggerSpec::make_rate(2.5, Stream::kDemographics));
  def.add_transition(b, a, TriggerSpec::make_timeout(1.0, Stream::kDemographics));
  std::ostringstream os;
  def.write_dot(os);
  std::string dot = os.str();
  REQUIRE(dot.find("digraph") != std::string::npos);
  REQUIRE(dot.find("idle") != std::string::npos);
  REQUIRE(dot.find("busy") != std::string::npos);
  REQUIRE(dot.find("->") != std::string::npos);
}

TEST_CASE("chart fuzz: random topology stays internally consistent") {
  // Random mix of rates, timeouts and self-loops on a handful of states;
  // the runtime must never fire a transition from an inactive state (the
  // engine throws if that invariant breaks) and occupancy epochs must tile
  // each agent's lifetime without gaps.
  for (uint64_t rep = 0; rep < 8; ++rep) {
    Simulation sim = make_sim(900 + rep);
    RngRegistry& r = sim.rng();
    ChartDefinition def("fuzz");
    const int n_states = 5;
    for (int i = 0; i < n_states; ++i) {
      def.add_state("s" + std::to_string(i));
      def.set_accrual_tag(i, i);
    }
    def.set_initial(0);
    for (int i = 0; i < 14; ++i) {
      int from = static_cast<int>(r.next_u64(Stream::kInitialization) % n_states);
      int to = static_cast<int>(r.next_u64(Stream::kInitialization) % n_states);
      if (r.bernoulli(Stream::kInitialization, 0.5)) {
        def.add_transition(from, to,
                           TriggerSpec::make_rate(
                               0.5 + r.uniform(Stream::kInitialization),
                               Stream::kDemographics),
                           [](Simulation& s, AgentId, double) {
                             return s.rng().uniform(Stream::kDemographics) <
                                    0.7;
                           });
      } else {
        def.add_transition(from, to,
                           TriggerSpec::make_timeout(
                               0.1 + r.uniform(Stream::kInitialization),
                               Stream::kDemographics));
      }
    }

    std::map<AgentId, double> last_exit;
    std::map<AgentId, double> accrued;
    sim.set_accrual_sink([&](AgentId a, int, double enter, double exit) {
      REQUIRE(exit >= enter);
      // Epochs arrive in order and tile the timeline.
      REQUIRE(enter == Catch::Approx(last_exit[a]).margin(1e-12));
      last_exit[a] = exit;
      accrued[a] += exit - enter;
    });

    std::vector<AgentId> ids;
    for (int i = 0; i < 50; ++i) ids.push_back(spawn(sim));
    for (AgentId id : ids) sim.add_chart(id, &def);
    sim.run_until(30.0);
    for (AgentId id : ids) sim.kill(id);
    for (AgentId id : ids) {
      REQUIRE(accrued[id] == Catch::Approx(30.0).margin(1e-9));
    }
  }
}
