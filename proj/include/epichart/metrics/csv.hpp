// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "epichart/metrics/series.hpp"

namespace epichart {

// Shortest round-trippable-ish decimal form; stable across runs because it
// never depends on locale or stream state.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct IncidenceRow {
  std::string arm;
  uint32_t realization = 0;
  int year = 0;
  std::string age_bin;
  uint64_t count = 0;
  double rate_per_100k = 0.0;
};

inline void write_incidence_csv(std::ostream& os,
                                const std::vector<IncidenceRow>& rows) {
  os << "arm,realization,year,age_bin,count,rate_per_100k\n";
  for (const auto& r : rows) {
    os << r.arm << ',' << r.realization << ',' << r.year << ',' << r.age_bin
       << ',' << r.count << ',' << format_number(r.rate_per_100k) << '\n';
  }
}

struct SummaryRow {
  std::string arm;
  int year = 0;
  BandPoint band;
};

inline void write_summary_csv(std::ostream& os,
                              const std::vector<SummaryRow>& rows) {
  os << "arm,year,q025,q25,q50,q75,q975,mean\n";
  for (const auto& r : rows) {
    os << r.arm << ',' << r.year << ',' << format_number(r.band.q025) << ','
       << format_number(r.band.q25) << ',' << format_number(r.band.q50) << ','
       << format_number(r.band.q75) << ',' << format_number(r.band.q975)
       << ',' << format_number(r.band.mean) << '\n';
  }
}

struct ContactRow {
  std::string row_bin;
  std::string col_bin;
  double contacts_per_day = 0.0;
};

inline void write_contact_csv(std::ostream& os,
                              const std::vector<ContactRow>& rows) {
  os << "row_bin,col_bin,contacts_per_day\n";
  for (const auto& r : rows) {
    os << r.row_bin << ',' << r.col_bin << ','
       << format_number(r.contacts_per_day) << '\n';
  }
}

struct EconRow {
  std::string arm;
  uint32_t realization = 0;
  std::string cost_category;
  double total = 0.0;
  double qalys = 0.0;
};

inline void write_econ_csv(std::ostream& os,
                           const std::vector<EconRow>& rows) {
  os << "arm,realization,cost_category,total,qalys\n";
  for (const auto& r : rows) {
    os << r.arm << ',' << r.realization << ',' << r.cost_category << ','
       << format_number(r.total) << ',' << format_number(r.qalys) << '\n';
  }
}

}  // namespace epichart
