// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace epichart {

// Kinds of logged model events. Low-rate happenings (infections, doses,
// deaths) go through the log; high-rate ones (contacts) are accumulated in
// place and never logged.
enum class LogEvent : uint16_t {
  kBirth = 1,
  kDeath = 2,
  kDeathFromInfection = 3,
  kInfection = 4,
  kBreakthroughInfection = 5,
  kRecovery = 6,
  kBoost = 7,
  kShinglesOnset = 8,
  kPhnOnset = 9,
  kShinglesRecovery = 10,
  kRelapse = 11,
  kDose1 = 12,
  kDose2 = 13,
  kDoseCatchUp = 14,
  kDoseRefused = 15,
  kMaternalDose = 16,
  kImportation = 17,
  kAscertainedCase = 18,
};

// One logged event. Age is stored in centiyears so the whole record stays
// at 16 bytes; 655 years of headroom is plenty.
struct SimEvent {
  double time;
  uint32_t agent;
  uint16_t kind;
  uint16_t centiage;
};
static_assert(sizeof(SimEvent) == 16);

class EventLog {
 public:
  void record(LogEvent kind, uint32_t agent, double time, double age) {
    double ca = age * 100.0;
    if (ca < 0.0) ca = 0.0;
    if (ca > 65535.0) ca = 65535.0;
    events_.push_back(SimEvent{time, agent, static_cast<uint16_t>(kind),
                               static_cast<uint16_t>(ca + 0.5)});
  }

  const std::vector<SimEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  void clear() { events_.clear(); }

  std::size_t count(LogEvent kind) const {
    std::size_t n = 0;
    for (const auto& e : events_) {
      if (e.kind == static_cast<uint16_t>(kind)) ++n;
    }
    return n;
  }

 private:
  std::vector<SimEvent> events_;
};

inline double event_age(const SimEvent& e) { return e.centiage / 100.0; }

}  // namespace epichart
