// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "epichart/metrics/events.hpp"
#include "epichart/population/person.hpp"

namespace epichart {

struct AgeBins {
  std::vector<double> edges;  // band starts; last band open-ended

  static AgeBins standard() {
    return AgeBins{{0.0, 1.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 60.0,
                    70.0, 80.0}};
  }

  std::size_t size() const { return edges.size(); }

  std::size_t bin(double age) const {
    std::size_t b = 0;
    while (b + 1 < edges.size() && age >= edges[b + 1]) ++b;
    return b;
  }

  std::string label(std::size_t i) const {
    char buf[32];
    if (i + 1 < edges.size()) {
      std::snprintf(buf, sizeof(buf), "%g-%g", edges[i], edges[i + 1]);
    } else {
      std::snprintf(buf, sizeof(buf), "%g+", edges[i]);
    }
    return buf;
  }

  void validate() const {
    if (edges.empty() || edges.front() != 0.0) {
      throw std::invalid_argument("age bins must start at 0");
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (edges[i] <= edges[i - 1]) {
        throw std::invalid_argument("age bin edges not ascending");
      }
    }
  }
};

// Exact person-time per (year, age bin), integrated analytically from each
// agent's lifespan. Years are unit intervals counted from `anchor`
// (observation year y covers [anchor + y, anchor + y + 1)).
class PersonTimeTable {
 public:
  PersonTimeTable(const AgeBins& bins, double anchor, int year_lo,
                  int year_hi)
      : bins_(bins), anchor_(anchor), year_lo_(year_lo), year_hi_(year_hi) {
    bins_.validate();
    if (year_hi < year_lo) throw std::invalid_argument("empty year range");
    cells_.assign(static_cast<std::size_t>(year_hi - year_lo + 1) *
                      bins_.size(),
                  0.0);
  }

  // Adds one lived interval [t0, t1) of an agent born at `birth`.
  void add_lifespan(double birth, double t0, double t1) {
    t0 = std::max(t0, anchor_ + year_lo_);
    t1 = std::min(t1, anchor_ + year_hi_ + 1.0);
    if (!(t1 > t0)) return;
    double t = t0;
    while (t < t1) {
      // Next boundary: year end or age-bin end, whichever is first.
      double year_end =
          anchor_ + std::floor(t - anchor_ + 1.0 + 1e-12);
      if (year_end <= t) year_end = t + 1.0;
      double age = t - birth;
      std::size_t b = bins_.bin(age);
      double bin_end = (b + 1 < bins_.size())
                           ? birth + bins_.edges[b + 1]
                           : std::numeric_limits<double>::infinity();
      double seg_end = std::min({t1, year_end, bin_end});
      if (!(seg_end > t)) seg_end = std::nextafter(t, t1);
      int year = static_cast<int>(std::floor(t - anchor_ + 1e-12));
      at(year, b) += seg_end - t;
      t = seg_end;
    }
  }

  // Integrates the whole population over the observation window.
  void add_population(const Population& pop, double run_end) {
    for (AgentId a = 0; a < pop.size(); ++a) {
      const PersonAgent& p = pop.agent(a);
      double end = p.alive ? run_end : p.death_time;
      add_lifespan(p.birth_time, p.birth_time, end);
    }
  }

  double& at(int year, std::size_t bin) {
    return cells_[static_cast<std::size_t>(year - year_lo_) * bins_.size() +
                  bin];
  }
  double at(int year, std::size_t bin) const {
    return cells_[static_cast<std::size_t>(year - year_lo_) * bins_.size() +
                  bin];
  }

  double year_total(int year) const {
    double s = 0.0;
    for (std::size_t b = 0; b < bins_.size(); ++b) s += at(year, b);
    return s;
  }

  double total() const {
    double s = 0.0;
    for (double c : cells_) s += c;
    return s;
  }

  const AgeBins& bins() const { return bins_; }
  int year_lo() const { return year_lo_; }
  int year_hi() const { return year_hi_; }
  double anchor() const { return anchor_; }

 private:
  AgeBins bins_;
  double anchor_;
  int year_lo_;
  int year_hi_;
  std::vector<double> cells_;
};

// Event counts on the same (year, age bin) grid as a PersonTimeTable.
class CountTable {
 public:
  CountTable(const AgeBins& bins, double anchor, int year_lo, int year_hi)
      : bins_(bins), anchor_(anchor), year_lo_(year_lo), year_hi_(year_hi) {
    cells_.assign(static_cast<std::size_t>(year_hi - year_lo + 1) *
                      bins_.size(),
                  0);
  }

  void add(double time, double age) {
    int year = static_cast<int>(std::floor(time - anchor_ + 1e-12));
    if (year < year_lo_ || year > year_hi_) return;
    ++cells_[static_cast<std::size_t>(year - year_lo_) * bins_.size() +
             bins_.bin(age)];
  }

  void add_events(const EventLog& log, LogEvent kind) {
    for (const auto& e : log.events()) {
      if (e.kind == static_cast<uint16_t>(kind)) add(e.time, event_age(e));
    }
  }

  uint64_t at(int year, std::size_t bin) const {
    return cells_[static_cast<std::size_t>(year - year_lo_) * bins_.size() +
                  bin];
  }

  uint64_t year_total(int year) const {
    uint64_t s = 0;
    for (std::size_t b = 0; b < bins_.size(); ++b) s += at(year, b);
    return s;
  }

  const AgeBins& bins() const { return bins_; }
  int year_lo() const { return year_lo_; }
  int year_hi() const { return year_hi_; }

 private:
  AgeBins bins_;
  double anchor_;
  int year_lo_;
  int year_hi_;
  std::vector<uint64_t> cells_;
};

// Who-contacts-whom accumulator. Contacts are tallied in both directions;
// rates are normalized later by source-bin person-time, so the result reads
// "contacts per person per day from bin i to bin j".
class ContactMatrix {
 public:
  explicit ContactMatrix(const AgeBins& bins) : bins_(bins) {
    bins_.validate();
    counts_.assign(bins_.size() * bins_.size(), 0.0);
  }

  void record(double source_age, double target_age) {
    counts_[bins_.bin(source_age) * bins_.size() + bins_.bin(target_age)] +=
        1.0;
    counts_[bins_.bin(target_age) * bins_.size() + bins_.bin(source_age)] +=
        1.0;
  }

  double count(std::size_t i, std::size_t j) const {
    return counts_[i * bins_.size() + j];
  }

  // Per-day contact rate given person-years spent in each source bin.
  double rate_per_day(std::size_t i, std::size_t j,
                      const std::vector<double>& person_years) const {
    double py = person_years[i];
    if (!(py > 0.0)) return 0.0;
    return count(i, j) / (py * 365.25);
  }

  double total() const {
    double s = 0.0;
    for (double c : counts_) s += c;
    return s;
  }

  const AgeBins& bins() const { return bins_; }

 private:
  AgeBins bins_;
  std::vector<double> counts_;
};

}  // namespace epichart
