// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "epichart/core/event_queue.hpp"
#include "epichart/core/rng.hpp"
#include "epichart/population/person.hpp"
#include "epichart/statechart/chart.hpp"

namespace epichart {

// Continuous-time simulation core for one realization. Single-threaded by
// design: one engine instance advances one trajectory; ensembles parallelize
// across engine instances, never within one.
//
// Callbacks (guards, actions, hooks) may schedule events, send messages,
// spawn agents and kill agents. Agent storage may reallocate while a
// callback runs, so the runtime re-fetches instances by id after every
// callback instead of holding references.
class Simulation {
 public:
  using HookFn = std::function<void(Simulation&, AgentId, double)>;
  using AccrualFn =
      std::function<void(AgentId, int tag, double enter, double exit)>;
  using TransitionObserver = std::function<void(
      AgentId, const ChartDefinition*, int from, int to, double t)>;

  Simulation(uint64_t master_seed, uint64_t realization)
      : rng_(master_seed, realization) {}

  double now() const { return now_; }
  RngRegistry& rng() { return rng_; }
  Population& population() { return pop_; }
  const Population& population() const { return pop_; }

  uint64_t processed_total() const { return processed_; }
  uint64_t stale_dropped() const { return stale_dropped_; }
  uint64_t dead_letter_count() const { return dead_letters_; }
  std::size_t pending_events() const { return queue_.size(); }

  // Epoch sink for states carrying an accrual tag (health-economic
  // bookkeeping); closed on every exit from a tagged state and on death.
  void set_accrual_sink(AccrualFn fn) { accrual_ = std::move(fn); }

  // Test/metrics instrumentation: called after every completed transition.
  void set_transition_observer(TransitionObserver fn) {
    observer_ = std::move(fn);
  }

  // ---- charts ------------------------------------------------------------

  // Attaches an instance of `def` to the agent, runs the initial state's
  // entry hook and arms its triggers. Returns the chart slot.
  uint16_t add_chart(AgentId a, const ChartDefinition* def) {
    return add_chart(a, def, def->initial());
  }

  // Same, but entering at an explicit state. Used when initializing a
  // population mid-history (an adult does not start maternally protected).
  uint16_t add_chart(AgentId a, const ChartDefinition* def, int start_state) {
    PersonAgent& p = pop_.agent(a);
    uint16_t slot = static_cast<uint16_t>(p.charts.size());
    p.charts.push_back(ChartInstance{def, start_state, 0, now_});
    const StateDef& st = def->state(start_state);
    if (st.on_entry) st.on_entry(*this, a, now_);
    if (pop_.agent(a).alive) arm_state(a, slot);
    return slot;
  }

  const ChartInstance& chart(AgentId a, uint16_t slot) const {
    return pop_.agent(a).charts[slot];
  }

  int state_of(AgentId a, uint16_t slot) const {
    return pop_.agent(a).charts[slot].state;
  }

  // Re-evaluates condition triggers on every chart of the agent. Condition
  // triggers fire only through this call; nothing re-checks them
  // spontaneously.
  void notify(AgentId a) {
    if (!pop_.agent(a).alive) return;
    for (uint16_t slot = 0; slot < pop_.agent(a).charts.size(); ++slot) {
      const ChartInstance inst = pop_.agent(a).charts[slot];
      for (int tidx : inst.def->outgoing(inst.state)) {
        const TransitionDef& tr = inst.def->transition(tidx);
        if (tr.trigger.kind != TriggerKind::kCondition) continue;
        if (tr.trigger.condition && tr.trigger.condition(*this, a, now_)) {
          execute_transition(a, slot, tidx);
          break;  // state changed (or self action ran); next chart
        }
      }
    }
  }

  // ---- messages ----------------------------------------------------------

  void send_message(AgentId from, AgentId to, MessageKind kind,
                    double delay = 0.0) {
    if (!(delay >= 0.0)) {
      throw std::logic_error("send_message: negative delivery delay");
    }
    Event e;
    e.time = now_ + delay;
    e.kind = EventKind::kMessage;
    e.agent = to;
    e.sender = from;
    e.message = kind;
    queue_.schedule(e);
  }

  // Sender of the message currently being delivered (kNoAgent outside a
  // delivery or for ambient messages).
  AgentId current_sender() const { return current_sender_; }

  // ---- hooks -------------------------------------------------------------

  uint16_t register_hook(HookFn fn) {
    hooks_.push_back(std::move(fn));
    return static_cast<uint16_t>(hooks_.size() - 1);
  }

  void schedule_hook(double t, uint16_t hook, AgentId subject = kNoAgent) {
    if (hook >= hooks_.size()) {
      throw std::logic_error("schedule_hook: unregistered hook");
    }
    check_future(t);
    Event e;
    e.time = t;
    e.kind = EventKind::kHook;
    e.agent = subject;
    e.hook = hook;
    queue_.schedule(e);
  }

  // ---- lifecycle ---------------------------------------------------------

  // Withdraws the agent from the world: closes open accrual epochs, cancels
  // every pending transition by advancing generations, updates accounting.
  // Chart states freeze where they are; pending messages to the agent are
  // dropped at delivery.
  void kill(AgentId a) {
    PersonAgent& p = pop_.agent(a);
    for (auto& inst : p.charts) {
      close_accrual(a, inst);
      ++inst.generation;
    }
    pop_.mark_dead(a, now_);
  }

  // ---- clock -------------------------------------------------------------

  // Processes every event with fire time <= t_end in (time, insertion)
  // order, then parks the clock at t_end. Returns the number of events
  // processed by this call (stale transition events count as processed;
  // they surface and are discarded).
  uint64_t run_until(double t_end) {
    if (!(t_end >= now_)) {
      throw std::logic_error("run_until: target before current time");
    }
    uint64_t count = 0;
    while (!queue_.empty() && queue_.top().time <= t_end) {
      Event e = queue_.pop();
      now_ = e.time;
      dispatch(e);
      ++count;
      ++processed_;
    }
    now_ = t_end;
    return count;
  }

 private:
  void check_future(double t) const {
    if (!(t >= now_)) {
      throw std::logic_error("schedule: fire time precedes the clock");
    }
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::kTransition: {
        const PersonAgent& p = pop_.agent(e.agent);
        if (!p.alive || e.chart >= p.charts.size() ||
            p.charts[e.chart].generation != e.generation) {
          ++stale_dropped_;  // superseded: the instance moved on
          return;
        }
        execute_transition(e.agent, e.chart, e.transition);
        return;
      }
      case EventKind::kMessage:
        deliver(e);
        return;
      case EventKind::kHook:
        hooks_[e.hook](*this, e.agent, now_);
        return;
    }
  }

  void deliver(const Event& msg) {
    if (msg.agent == kNoAgent || !pop_.agent(msg.agent).alive) {
      ++dead_letters_;
      return;
    }
    current_sender_ = msg.sender;
    AgentId a = msg.agent;
    for (uint16_t slot = 0; slot < pop_.agent(a).charts.size(); ++slot) {
      const ChartInstance inst = pop_.agent(a).charts[slot];
      for (int tidx : inst.def->outgoing(inst.state)) {
        const TransitionDef& tr = inst.def->transition(tidx);
        if (tr.trigger.kind != TriggerKind::kMessage ||
            tr.trigger.message != msg.message) {
          continue;
        }
        if (tr.guard && !tr.guard(*this, a, now_)) continue;
        execute_transition_unguarded(a, slot, tidx);
        break;  // this chart consumed the message
      }
      if (!pop_.agent(a).alive) break;  // a transition killed the recipient
    }
    current_sender_ = kNoAgent;
  }

  // Arms scheduled triggers (rate, timeout) for the instance's active state.
  void arm_state(AgentId a, uint16_t slot) {
    const ChartInstance inst = pop_.agent(a).charts[slot];
    for (int tidx : inst.def->outgoing(inst.state)) {
      arm_transition(a, slot, tidx);
    }
  }

  void arm_transition(AgentId a, uint16_t slot, int tidx) {
    const ChartInstance inst = pop_.agent(a).charts[slot];
    const TransitionDef& tr = inst.def->transition(tidx);
    double fire_at;
    switch (tr.trigger.kind) {
      case TriggerKind::kRate: {
        double rate = tr.trigger.rate_fn
                          ? tr.trigger.rate_fn(*this, a, now_)
                          : tr.trigger.rate;
        if (rate < 0.0 || !std::isfinite(rate)) {
          throw std::logic_error(inst.def->name() +
                                 ": negative or non-finite hazard");
        }
        if (rate == 0.0) return;  // disabled arrow
        fire_at = now_ + rng_.exponential(tr.trigger.stream, rate);
        break;
      }
      case TriggerKind::kTimeout: {
        double dur = tr.trigger.duration_fn
                         ? tr.trigger.duration_fn(*this, a, now_)
                         : tr.trigger.duration;
        if (dur < 0.0 || !std::isfinite(dur)) {
          throw std::logic_error(inst.def->name() +
                                 ": negative or non-finite timeout");
        }
        fire_at = now_ + dur;
        break;
      }
      default:
        return;  // message/condition triggers wait passively
    }
    Event e;
    e.time = fire_at;
    e.kind = EventKind::kTransition;
    e.agent = a;
    e.chart = slot;
    e.transition = static_cast<uint16_t>(tidx);
    e.generation = pop_.agent(a).charts[slot].generation;
    queue_.schedule(e);
  }

  // Entry point for scheduled triggers: applies the guard with re-arm
  // semantics (a false guard on a rate trigger re-arms it, which is how
  // time-varying hazards thin against an upper bound; a false guard on a
  // timeout discards the one-shot).
  void execute_transition(AgentId a, uint16_t slot, int tidx) {
    const ChartInstance inst = pop_.agent(a).charts[slot];
    const TransitionDef& tr = inst.def->transition(tidx);
    if (tr.guard && !tr.guard(*this, a, now_)) {
      if (tr.trigger.kind == TriggerKind::kRate && pop_.agent(a).alive &&
          pop_.agent(a).charts[slot].generation == inst.generation) {
        arm_transition(a, slot, tidx);
      }
      return;
    }
    execute_transition_unguarded(a, slot, tidx);
  }

  void execute_transition_unguarded(AgentId a, uint16_t slot, int tidx) {
    {
      const ChartInstance inst = pop_.agent(a).charts[slot];
      const TransitionDef& tr = inst.def->transition(tidx);
      if (tr.from != inst.state) {
        throw std::logic_error(inst.def->name() +
                               ": firing transition from inactive state");
      }
      if (tr.from == tr.to) {
        // Internal update: the action runs, the accrual epoch and every
        // other pending trigger stay untouched, and only this trigger
        // re-arms (periodic self-updates rely on this).
        if (observer_) observer_(a, inst.def, tr.from, tr.to, now_);
        if (tr.action) tr.action(*this, a, now_);
        if (agent_intact(a, slot, inst.generation) &&
            (tr.trigger.kind == TriggerKind::kRate ||
             tr.trigger.kind == TriggerKind::kTimeout)) {
          arm_transition(a, slot, tidx);
        }
        return;
      }
    }

    // Full transition. Re-fetch after every callback: agent storage may
    // reallocate underneath us.
    const ChartDefinition* def = pop_.agent(a).charts[slot].def;
    const TransitionDef& tr = def->transition(tidx);
    const StateDef& from_state = def->state(tr.from);
    if (from_state.on_exit) from_state.on_exit(*this, a, now_);
    close_accrual(a, pop_.agent(a).charts[slot]);

    uint32_t gen;
    {
      ChartInstance& inst = pop_.agent(a).charts[slot];
      inst.state = tr.to;
      gen = ++inst.generation;
      inst.entry_time = now_;
    }

    const StateDef& to_state = def->state(tr.to);
    if (to_state.on_entry) to_state.on_entry(*this, a, now_);
    if (agent_intact(a, slot, gen)) arm_state(a, slot);
    if (observer_) observer_(a, def, tr.from, tr.to, now_);
    if (tr.action) tr.action(*this, a, now_);
  }

  // True when the agent is alive and no nested callback moved the chart on.
  bool agent_intact(AgentId a, uint16_t slot, uint32_t gen) const {
    const PersonAgent& p = pop_.agent(a);
    return p.alive && p.charts[slot].generation == gen;
  }

  void close_accrual(AgentId a, const ChartInstance& inst) {
    int tag = inst.def->state(inst.state).accrual_tag;
    if (tag >= 0 && accrual_) accrual_(a, tag, inst.entry_time, now_);
  }

  double now_ = 0.0;
  RngRegistry rng_;
  Population pop_;
  EventQueue queue_;
  std::vector<HookFn> hooks_;
  AccrualFn accrual_;
  TransitionObserver observer_;
  AgentId current_sender_ = kNoAgent;
  uint64_t processed_ = 0;
  uint64_t stale_dropped_ = 0;
  uint64_t dead_letters_ = 0;
};

}  // namespace epichart
