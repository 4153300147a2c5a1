// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

namespace epichart {

using AgentId = uint32_t;
inline constexpr AgentId kNoAgent = 0xffffffffu;

// Message kinds are small integers owned by the model packs; the engine
// treats them as opaque.
using MessageKind = uint16_t;

enum class EventKind : uint8_t {
  kTransition,  // scheduled statechart transition (rate or timeout trigger)
  kMessage,     // message delivery to an agent
  kHook,        // registered callback (interventions, samplers, doses, ...)
};

// Flat event record. One struct serves every kind; unused fields are left at
// their defaults so the pending set stays a plain contiguous heap.
struct Event {
  double time = 0.0;
  uint64_t seq = 0;  // assigned at insertion; breaks time ties
  EventKind kind = EventKind::kHook;
  AgentId agent = kNoAgent;   // transition/hook subject or message recipient
  AgentId sender = kNoAgent;  // message source (kNoAgent for ambient)
  uint32_t generation = 0;    // chart instance generation at scheduling time
  uint16_t chart = 0;         // chart slot on the agent
  uint16_t transition = 0;    // transition index in the chart definition
  MessageKind message = 0;
  uint16_t hook = 0;
};

// Pending-event set: min-heap on (time, seq). Sequence numbers increase
// monotonically with insertion, so events scheduled for the same instant
// fire in insertion order.
class EventQueue {
 public:
  void schedule(Event e) {
    e.seq = next_seq_++;
    heap_.push(e);
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Event& top() const { return heap_.top(); }

  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

  void clear() {
    heap_ = {};
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  uint64_t next_seq_ = 0;
};

}  // namespace epichart
