// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace epichart {

// Pearson correlation of the pairs (x[t], x[t+lag]), each sequence centered
// on its own mean. Returns 0 when either segment has no variance.
inline double autocorrelation(const std::vector<double>& x, std::size_t lag) {
  if (lag == 0) return 1.0;
  if (x.size() < lag + 2) {
    throw std::invalid_argument("autocorrelation: series too short for lag");
  }
  std::size_t n = x.size() - lag;
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += x[i];
    mean_b += x[i + lag];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = x[i] - mean_a;
    double db = x[i + lag] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  // The no-variance check must survive rounding: summing a constant whose
  // value is not exactly representable leaves ulp-sized residuals that would
  // otherwise masquerade as a perfect correlation.
  double scale = std::max(std::abs(mean_a), std::abs(mean_b));
  double floor = static_cast<double>(n) * (scale * 1e-12) * (scale * 1e-12);
  if (!(saa > floor) || !(sbb > floor)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Linear-interpolation quantile (the "h = (n-1)p" convention). Input need
// not be sorted; p in [0, 1].
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("quantile: empty sample");
  }
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("quantile: p outside [0,1]");
  }
  std::sort(values.begin(), values.end());
  double h = (static_cast<double>(values.size()) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

// Cross-realization envelope at one grid point.
struct BandPoint {
  double q025 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
  double mean = 0.0;

  static BandPoint from(const std::vector<double>& sample) {
    BandPoint b;
    b.q025 = quantile(sample, 0.025);
    b.q25 = quantile(sample, 0.25);
    b.q50 = quantile(sample, 0.50);
    b.q75 = quantile(sample, 0.75);
    b.q975 = quantile(sample, 0.975);
    b.mean = mean_of(sample);
    return b;
  }
};

// Summarizes an ensemble of series sharing one grid: series[r][t] is
// realization r at grid point t.
inline std::vector<BandPoint> summarize_ensemble(
    const std::vector<std::vector<double>>& series) {
  if (series.empty()) {
    throw std::invalid_argument("summarize_ensemble: no realizations");
  }
  std::size_t len = series.front().size();
  for (const auto& s : series) {
    if (s.size() != len) {
      throw std::invalid_argument("summarize_ensemble: ragged grid");
    }
  }
  std::vector<BandPoint> out(len);
  std::vector<double> sample(series.size());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t r = 0; r < series.size(); ++r) sample[r] = series[r][t];
    out[t] = BandPoint::from(sample);
  }
  return out;
}

// Within-realization paired differences (b minus a) on a shared grid,
// then the cross-realization envelope of those differences. Pairing by
// realization keeps common-random-number noise out of the contrast.
inline std::vector<BandPoint> paired_difference(
    const std::vector<std::vector<double>>& arm_a,
    const std::vector<std::vector<double>>& arm_b) {
  if (arm_a.size() != arm_b.size()) {
    throw std::invalid_argument("paired_difference: arm sizes differ");
  }
  std::vector<std::vector<double>> diff(arm_a.size());
  for (std::size_t r = 0; r < arm_a.size(); ++r) {
    if (arm_a[r].size() != arm_b[r].size()) {
      throw std::invalid_argument("paired_difference: grids differ");
    }
    diff[r].resize(arm_a[r].size());
    for (std::size_t t = 0; t < arm_a[r].size(); ++t) {
      diff[r][t] = arm_b[r][t] - arm_a[r][t];
    }
  }
  return summarize_ensemble(diff);
}

}  // namespace epichart
