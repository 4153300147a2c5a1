// Pertussis humoral protection: two lazily-waned components plus a memory
// class that fixes the active waning rate. Protection is never stored as a
// current value; it is reconstructed from the last touch point, so agents
// that go years without pertussis events cost nothing to keep current.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace epichart::pertussis {

// Ordered by waning speed of the memory they leave behind: natural wanes
// slowest, acellular fastest. Naive carries no active component at all.
enum class MemoryType : unsigned char {
  kNaive = 0,
  kNatural = 1,
  kWholeCell = 2,
  kAcellular = 3,
};

inline const char* memory_name(MemoryType m) {
  switch (m) {
    case MemoryType::kNaive: return "naive";
    case MemoryType::kNatural: return "natural";
    case MemoryType::kWholeCell: return "wholeCell";
    case MemoryType::kAcellular: return "acellular";
  }
  return "?";
}

struct WaningRates {
  double natural = 0.04;     // per year
  double whole_cell = 0.08;  // per year
  double acellular = 0.12;   // per year
  double passive = 1.8;      // per year, maternal antibodies

  double active_rate(MemoryType m) const {
    switch (m) {
      case MemoryType::kNaive: return 0.0;
      case MemoryType::kNatural: return natural;
      case MemoryType::kWholeCell: return whole_cell;
      case MemoryType::kAcellular: return acellular;
    }
    return 0.0;
  }

  void validate() const {
    if (!(natural > 0.0) || !(whole_cell > 0.0) || !(acellular > 0.0) ||
        !(passive > 0.0)) {
      throw std::invalid_argument("waning rates must be positive");
    }
    // Natural immunity must outlast whole-cell, which must outlast
    // acellular; the model's ordering claims depend on it.
    if (natural > whole_cell || whole_cell > acellular) {
      throw std::invalid_argument(
          "waning order violated: need natural <= wholeCell <= acellular");
    }
  }
};

// Active and passive components, each anchored at the time it was last set.
// Total protection is min(active + passive, 1).
struct ImmunityState {
  double p_active = 0.0;
  double p_passive = 0.0;
  double t_active = 0.0;   // time p_active was last written
  double t_passive = 0.0;  // time p_passive was last written
  MemoryType memory = MemoryType::kNaive;

  double active_at(double t, const WaningRates& w) const {
    if (p_active <= 0.0) return 0.0;
    if (t < t_active) throw std::logic_error("immunity queried in the past");
    return p_active * std::exp(-w.active_rate(memory) * (t - t_active));
  }

  double passive_at(double t, const WaningRates& w) const {
    if (p_passive <= 0.0) return 0.0;
    if (t < t_passive) throw std::logic_error("immunity queried in the past");
    return p_passive * std::exp(-w.passive * (t - t_passive));
  }

  double protection_at(double t, const WaningRates& w) const {
    return std::min(active_at(t, w) + passive_at(t, w), 1.0);
  }

  // Re-anchors both components at `t` without changing their values. Handy
  // before comparing or mutating, and a no-op for protection_at.
  void settle(double t, const WaningRates& w) {
    p_active = active_at(t, w);
    t_active = t;
    p_passive = passive_at(t, w);
    t_passive = t;
  }
};

// A vaccine dose lifts the active component to the dose's target level
// (never lowers it) and can only slow the active waning rate, never speed
// it up: prior natural immunity keeps its slow decay after a later shot.
// When maternal antibodies are still present, early doses are blunted: the
// achieved level is scaled by `blunting` instead of taking full effect.
inline void apply_dose(ImmunityState& s, double t, double level,
                       MemoryType vaccine_memory, const WaningRates& w,
                       bool blunt, double blunting) {
  s.settle(t, w);
  double target = blunt ? level * blunting : level;
  s.p_active = std::max(s.p_active, target);
  if (w.active_rate(vaccine_memory) < w.active_rate(s.memory) ||
      s.memory == MemoryType::kNaive) {
    s.memory = vaccine_memory;
  }
}

// Natural infection resets the active component to full and leaves the
// slowest-waning memory.
inline void apply_recovery(ImmunityState& s, double t) {
  s.p_active = 1.0;
  s.t_active = t;
  s.memory = MemoryType::kNatural;
}

// Transfer at birth: the newborn's passive component is a fraction of the
// mother's total protection at delivery.
inline void transfer_maternal(ImmunityState& child, double t,
                              double mother_protection, double fraction) {
  child.p_passive = fraction * mother_protection;
  child.t_passive = t;
}

}  // namespace epichart::pertussis
