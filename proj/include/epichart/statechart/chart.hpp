// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epichart/core/event_queue.hpp"
#include "epichart/core/rng.hpp"

namespace epichart {

class Simulation;

// Callbacks receive the owning simulation, the agent the chart instance is
// attached to, and the current time. Definitions are immutable and shared by
// every instance; per-agent state lives in the model pack, reached through
// the simulation from inside the callback.
using ActionFn = std::function<void(Simulation&, AgentId, double)>;
using GuardFn = std::function<bool(Simulation&, AgentId, double)>;
using RateFn = std::function<double(Simulation&, AgentId, double)>;
using DurationFn = std::function<double(Simulation&, AgentId, double)>;
using ConditionFn = std::function<bool(Simulation&, AgentId, double)>;

enum class TriggerKind : uint8_t { kRate, kTimeout, kMessage, kCondition };

// One trigger. Constant rate/duration take the fast path; the _fn variants
// are evaluated at arming time (rates are treated as constant until the
// transition re-arms, so time-varying hazards are handled by arming at an
// upper bound and thinning in the guard).
struct TriggerSpec {
  TriggerKind kind = TriggerKind::kRate;
  Stream stream = Stream::kTransmission;
  double rate = 0.0;
  RateFn rate_fn;
  double duration = 0.0;
  DurationFn duration_fn;
  MessageKind message = 0;
  ConditionFn condition;

  static TriggerSpec make_rate(double hazard, Stream s) {
    TriggerSpec t;
    t.kind = TriggerKind::kRate;
    t.rate = hazard;
    t.stream = s;
    return t;
  }
  static TriggerSpec make_rate(RateFn hazard, Stream s) {
    TriggerSpec t;
    t.kind = TriggerKind::kRate;
    t.rate_fn = std::move(hazard);
    t.stream = s;
    return t;
  }
  static TriggerSpec make_timeout(double dur, Stream s) {
    TriggerSpec t;
    t.kind = TriggerKind::kTimeout;
    t.duration = dur;
    t.stream = s;
    return t;
  }
  static TriggerSpec make_timeout(DurationFn dur, Stream s) {
    TriggerSpec t;
    t.kind = TriggerKind::kTimeout;
    t.duration_fn = std::move(dur);
    t.stream = s;
    return t;
  }
  static TriggerSpec make_message(MessageKind kind) {
    TriggerSpec t;
    t.kind = TriggerKind::kMessage;
    t.message = kind;
    return t;
  }
  static TriggerSpec make_condition(ConditionFn cond) {
    TriggerSpec t;
    t.kind = TriggerKind::kCondition;
    t.condition = std::move(cond);
    return t;
  }
};

struct StateDef {
  std::string name;
  ActionFn on_entry;
  ActionFn on_exit;
  int accrual_tag = -1;  // >= 0: occupancy epochs reported to the accrual sink
};

struct TransitionDef {
  int from = -1;
  int to = -1;
  TriggerSpec trigger;
  GuardFn guard;    // evaluated at fire time; false vetoes the transition
  ActionFn action;  // runs after the target state is entered and armed
};

// Immutable chart topology plus per-state/per-transition callbacks.
// Build once per model pack, instantiate per agent.
class ChartDefinition {
 public:
  explicit ChartDefinition(std::string name) : name_(std::move(name)) {}

  int add_state(std::string state_name) {
    states_.push_back(StateDef{std::move(state_name), {}, {}, -1});
    outgoing_.emplace_back();
    return static_cast<int>(states_.size()) - 1;
  }

  void set_initial(int state) { initial_ = check_state(state); }
  void set_entry(int state, ActionFn fn) {
    states_[check_state(state)].on_entry = std::move(fn);
  }
  void set_exit(int state, ActionFn fn) {
    states_[check_state(state)].on_exit = std::move(fn);
  }
  void set_accrual_tag(int state, int tag) {
    states_[check_state(state)].accrual_tag = tag;
  }

  int add_transition(int from, int to, TriggerSpec trigger, GuardFn guard = {},
                     ActionFn action = {}) {
    check_state(from);
    check_state(to);
    transitions_.push_back(TransitionDef{from, to, std::move(trigger),
                                         std::move(guard), std::move(action)});
    int idx = static_cast<int>(transitions_.size()) - 1;
    outgoing_[from].push_back(idx);
    return idx;
  }

  const std::string& name() const { return name_; }
  int initial() const { return initial_; }
  int state_count() const { return static_cast<int>(states_.size()); }
  const StateDef& state(int s) const { return states_[s]; }
  const std::string& state_name(int s) const { return states_[s].name; }
  const TransitionDef& transition(int i) const { return transitions_[i]; }
  int transition_count() const { return static_cast<int>(transitions_.size()); }
  const std::vector<int>& outgoing(int state) const { return outgoing_[state]; }

  int state_index(std::string_view state_name) const {
    for (int i = 0; i < state_count(); ++i) {
      if (states_[i].name == state_name) return i;
    }
    throw std::out_of_range("no state named '" + std::string(state_name) +
                            "' in chart " + name_);
  }

  // Graphviz debug view: states as nodes, transitions labelled by trigger.
  void write_dot(std::ostream& os) const {
    os << "digraph \"" << name_ << "\" {\n";
    os << "  rankdir=LR;\n  node [shape=box, style=rounded];\n";
    for (int i = 0; i < state_count(); ++i) {
      os << "  s" << i << " [label=\"" << states_[i].name << "\"";
      if (i == initial_) os << ", peripheries=2";
      os << "];\n";
    }
    for (const auto& tr : transitions_) {
      os << "  s" << tr.from << " -> s" << tr.to << " [label=\""
         << trigger_label(tr) << "\"];\n";
    }
    os << "}\n";
  }

 private:
  int check_state(int s) const {
    if (s < 0 || s >= state_count()) {
      throw std::out_of_range("chart " + name_ + ": bad state index");
    }
    return s;
  }

  static std::string trigger_label(const TransitionDef& tr) {
    std::string label;
    switch (tr.trigger.kind) {
      case TriggerKind::kRate:
        label = tr.trigger.rate_fn
                    ? "rate(dynamic)"
                    : "rate(" + trim_number(tr.trigger.rate) + "/yr)";
        break;
      case TriggerKind::kTimeout:
        label = tr.trigger.duration_fn
                    ? "after(sampled)"
                    : "after(" + trim_number(tr.trigger.duration) + "yr)";
        break;
      case TriggerKind::kMessage:
        label = "msg(" + std::to_string(tr.trigger.message) + ")";
        break;
      case TriggerKind::kCondition:
        label = "condition";
        break;
    }
    if (tr.guard) label += " [guard]";
    return label;
  }

  static std::string trim_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
  }

  std::string name_;
  std::vector<StateDef> states_;
  std::vector<TransitionDef> transitions_;
  std::vector<std::vector<int>> outgoing_;
  int initial_ = 0;
};

// Per-agent chart instance: current state, entry time of that state, and a
// generation counter. Pending scheduled transitions carry the generation
// they were armed under; after any state change the generation advances, so
// superseded events are recognized and dropped when they surface.
struct ChartInstance {
  const ChartDefinition* def = nullptr;
  int32_t state = 0;
  uint32_t generation = 0;
  double entry_time = 0.0;
};

}  // namespace epichart
