// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
//
// Ensemble execution: realizations fan out over a worker pool, each worker
// owning a private engine instance, and a single-threaded collector merges
// results in realization order. Output bytes are a function of the scenario
// and seed alone, never of the worker count; everything that could differ
// between runs (wall clock, failures) is quarantined in the manifest.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epichart/metrics/accumulators.hpp"
#include "epichart/metrics/csv.hpp"
#include "epichart/metrics/events.hpp"
#include "epichart/metrics/series.hpp"
#include "epichart/metrics/svg.hpp"
#include "epichart/pertussis/pack.hpp"
#include "epichart/scenario/config.hpp"
#include "epichart/varicella/pack.hpp"
#include "epichart/version.hpp"

namespace epichart::scenario {

struct RunOptions {
  uint32_t jobs = 1;
  bool quiet = false;
  // Test seam: makes the named realization fail in every arm, exercising
  // the discard-and-report path without needing a genuinely broken model.
  std::optional<uint32_t> fail_realization;
};

// Everything one (arm, realization) run contributes to the output files.
struct RealizationOutput {
  CountTable primary;    // chickenpox episodes / pertussis true cases
  CountTable secondary;  // shingles onsets / ascertained cases
  PersonTimeTable person_time;
  std::vector<std::pair<std::string, double>> coverage;
  std::vector<std::pair<std::string, double>> costs;  // category -> total
  double qalys = 0.0;
  std::optional<ContactMatrix> contacts;          // realization 0 only
  std::vector<double> contact_person_years;       // matches contacts' bins
  std::vector<pertussis::ProtectionSample> samples;

  RealizationOutput(const AgeBins& bins, double anchor, int years)
      : primary(bins, anchor, 0, years - 1),
        secondary(bins, anchor, 0, years - 1),
        person_time(bins, anchor, 0, years - 1) {}
};

inline AgeBins contact_bins() {
  AgeBins b;
  for (double e = 0.0; e <= 80.0; e += 5.0) b.edges.push_back(e);
  return b;
}

inline RealizationOutput run_single(const ScenarioConfig& cfg,
                                    const ArmSpec& arm, uint32_t realization,
                                    bool want_extras) {
  const AgeBins bins = AgeBins::standard();
  const int years = cfg.report_years();
  RealizationOutput out(bins, cfg.burn_in_years, years);

  Simulation sim(cfg.master_seed, realization);
  EventLog log;

  if (cfg.pack == PackKind::kVaricella) {
    varicella::VzvPack pack(sim, arm.vzv, cfg.demo, &log,
                            cfg.burn_in_years);
    pack.init_world(cfg.population);
    sim.run_until(cfg.horizon_years);

    out.primary.add_events(log, LogEvent::kInfection);
    out.primary.add_events(log, LogEvent::kBreakthroughInfection);
    out.secondary.add_events(log, LogEvent::kShinglesOnset);
    out.person_time.add_population(sim.population(), cfg.horizon_years);

    out.coverage = {
        {"dose1_eligible", static_cast<double>(pack.dose1_eligible())},
        {"dose1_administered",
         static_cast<double>(pack.dose1_administered())},
        {"dose2_eligible", static_cast<double>(pack.dose2_eligible())},
        {"dose2_administered",
         static_cast<double>(pack.dose2_administered())},
        {"catch_up_administered",
         static_cast<double>(pack.catch_up_administered())},
    };
    for (int c = 0; c < varicella::kEconCategoryCount; ++c) {
      out.costs.emplace_back(
          varicella::econ_category_name(c),
          pack.cost(static_cast<varicella::EconCategory>(c)));
    }
    out.qalys =
        pack.baseline_qalys(cfg.horizon_years) + pack.qaly_adjustment();
  } else {
    std::optional<ContactMatrix> cm;
    if (want_extras) cm.emplace(contact_bins());
    pertussis::PertussisPack pack(sim, arm.per, cfg.demo, &log,
                                  cm ? &*cm : nullptr);
    pack.init_world(cfg.population);
    sim.run_until(cfg.horizon_years);

    out.primary.add_events(log, LogEvent::kInfection);
    out.secondary.add_events(log, LogEvent::kAscertainedCase);
    out.person_time.add_population(sim.population(), cfg.horizon_years);

    out.coverage = {
        {"true_cases", static_cast<double>(pack.true_cases())},
        {"reported_cases", static_cast<double>(pack.reported_cases())},
        {"maternal_doses", static_cast<double>(pack.maternal_doses())},
    };
    for (std::size_t k = 0; k < arm.per.schedule.size(); ++k) {
      char key[32];
      std::snprintf(key, sizeof(key), "dose%zu_administered", k + 1);
      out.coverage.emplace_back(
          key, static_cast<double>(
                   pack.doses_administered(static_cast<int>(k))));
    }
    // Audit each dose 1.5 years past its due age (the grace window the
    // compliance calibration is pinned at), over the run-born cohort that
    // has reached the audit age by the end of the run.
    for (std::size_t k = 0; k < arm.per.schedule.size(); ++k) {
      char key[32];
      std::snprintf(key, sizeof(key), "dose%zu_coverage", k + 1);
      out.coverage.emplace_back(
          key, pack.dose_coverage(static_cast<int>(k),
                                  arm.per.schedule[k] + 1.5,
                                  cfg.horizon_years));
    }
    if (cm) {
      // Person-years on the contact grid, integrated over the whole run.
      PersonTimeTable pt(contact_bins(), 0.0, 0,
                         static_cast<int>(std::ceil(cfg.horizon_years)) - 1);
      pt.add_population(sim.population(), cfg.horizon_years);
      out.contact_person_years.resize(pt.bins().size(), 0.0);
      for (std::size_t b = 0; b < pt.bins().size(); ++b) {
        for (int y = pt.year_lo(); y <= pt.year_hi(); ++y) {
          out.contact_person_years[b] += pt.at(y, b);
        }
      }
      out.contacts = std::move(cm);
    }
    out.samples.assign(pack.samples().begin(), pack.samples().end());
  }
  return out;
}

namespace detail {

struct TaskKey {
  std::size_t arm;
  uint32_t realization;
};

inline std::string iso_utc(std::chrono::system_clock::time_point tp) {
  std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& body,
                       std::vector<std::string>& artifacts) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot write " + path.string());
  }
  os << body;
  artifacts.push_back(path.filename().string());
}

}  // namespace detail

struct EnsembleResult {
  bool ok = true;
  nlohmann::ordered_json manifest;
};

inline EnsembleResult run_ensemble(const ScenarioConfig& cfg,
                                   const std::string& scenario_text,
                                   const std::string& out_dir,
                                   const RunOptions& opt) {
  namespace fs = std::filesystem;
  const auto started = std::chrono::system_clock::now();
  const std::vector<ArmSpec> arms = cfg.arms();
  const int years = cfg.report_years();
  const AgeBins bins = AgeBins::standard();

  fs::create_directories(out_dir);

  // One task per (arm, realization); extras (contact matrix, protection
  // samples) come from realization 0 so they are single, well-defined
  // artifacts rather than accidental unions.
  std::vector<detail::TaskKey> tasks;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    for (uint32_t r = 0; r < cfg.realizations; ++r) {
      tasks.push_back({a, r});
    }
  }
  std::vector<std::optional<RealizationOutput>> results(tasks.size());
  std::vector<std::string> errors(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const detail::TaskKey& key = tasks[i];
      try {
        if (opt.fail_realization && *opt.fail_realization == key.realization) {
          throw std::runtime_error("injected failure (test seam)");
        }
        results[i].emplace(run_single(cfg, arms[key.arm], key.realization,
                                      key.realization == 0));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      } catch (...) {
        errors[i] = "unknown worker error";
      }
    }
  };

  uint32_t pool = std::max<uint32_t>(1, opt.jobs);
  pool = static_cast<uint32_t>(
      std::min<std::size_t>(pool, tasks.size()));
  {
    std::vector<std::thread> threads;
    for (uint32_t w = 1; w < pool; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
  }

  // A failed run poisons its whole realization across arms: paired
  // statistics would otherwise silently lose their pairing.
  std::vector<bool> dropped(cfg.realizations, false);
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i].empty()) {
      dropped[tasks[i].realization] = true;
      failures.push_back({{"arm", arms[tasks[i].arm].name},
                          {"realization", tasks[i].realization},
                          {"error", errors[i]}});
    }
  }
  auto result_of = [&](std::size_t arm_idx,
                       uint32_t r) -> const RealizationOutput* {
    if (dropped[r]) return nullptr;
    return &*results[arm_idx * cfg.realizations + r];
  };

  std::vector<std::string> artifacts;

  // incidence.csv and its pack-specific sibling.
  auto incidence_rows = [&](bool use_secondary) {
    std::vector<IncidenceRow> rows;
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (uint32_t r = 0; r < cfg.realizations; ++r) {
        const RealizationOutput* out = result_of(a, r);
        if (!out) continue;
        const CountTable& counts = use_secondary ? out->secondary
                                                 : out->primary;
        for (int y = 0; y < years; ++y) {
          for (std::size_t b = 0; b < bins.size(); ++b) {
            IncidenceRow row;
            row.arm = arms[a].name;
            row.realization = r;
            row.year = y;
            row.age_bin = bins.label(b);
            row.count = counts.at(y, b);
            double py = out->person_time.at(y, b);
            row.rate_per_100k =
                py > 0.0 ? static_cast<double>(row.count) / py * 1e5 : 0.0;
            rows.push_back(std::move(row));
          }
        }
      }
    }
    return rows;
  };

  {
    std::ostringstream os;
    write_incidence_csv(os, incidence_rows(false));
    detail::write_file(fs::path(out_dir) / "incidence.csv", os.str(),
                       artifacts);
  }
  {
    std::ostringstream os;
    write_incidence_csv(os, incidence_rows(true));
    const char* name = cfg.pack == PackKind::kVaricella
                           ? "shingles_incidence.csv"
                           : "ascertained_incidence.csv";
    detail::write_file(fs::path(out_dir) / name, os.str(), artifacts);
  }

  // Yearly all-ages rate series per arm and realization, feeding the
  // summary table, the fan chart, and the autocorrelation report.
  auto rate_series = [&](std::size_t arm_idx) {
    std::vector<std::vector<double>> series;
    for (uint32_t r = 0; r < cfg.realizations; ++r) {
      const RealizationOutput* out = result_of(arm_idx, r);
      if (!out) continue;
      std::vector<double> s(static_cast<std::size_t>(years), 0.0);
      for (int y = 0; y < years; ++y) {
        double py = out->person_time.year_total(y);
        s[static_cast<std::size_t>(y)] =
            py > 0.0
                ? static_cast<double>(out->primary.year_total(y)) / py * 1e5
                : 0.0;
      }
      series.push_back(std::move(s));
    }
    return series;
  };

  std::vector<SummaryRow> summary_rows;
  std::vector<svgplot::FanSeries> fans;
  nlohmann::ordered_json autocorr;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    auto series = rate_series(a);
    if (series.empty()) continue;
    auto bands = summarize_ensemble(series);
    svgplot::FanSeries fan;
    fan.label = arms[a].name;
    for (int y = 0; y < years; ++y) {
      summary_rows.push_back(
          {arms[a].name, y, bands[static_cast<std::size_t>(y)]});
      fan.xs.push_back(y);
      fan.bands.push_back(bands[static_cast<std::size_t>(y)]);
    }
    fans.push_back(std::move(fan));

    // Lag-1 autocorrelation of the median yearly series; undefined for a
    // constant series and reported as missing rather than as a number.
    std::vector<double> median(static_cast<std::size_t>(years));
    for (int y = 0; y < years; ++y) {
      median[static_cast<std::size_t>(y)] =
          bands[static_cast<std::size_t>(y)].q50;
    }
    auto [lo, hi] = std::minmax_element(median.begin(), median.end());
    if (median.size() < 3 || *lo == *hi) {
      autocorr[arms[a].name] = nullptr;
    } else {
      autocorr[arms[a].name] = autocorrelation(median, 1);
    }
  }
  {
    std::ostringstream os;
    write_summary_csv(os, summary_rows);
    detail::write_file(fs::path(out_dir) / "summary.csv", os.str(),
                       artifacts);
  }
  {
    std::ostringstream os;
    svgplot::write_fan_chart(os, cfg.name + ": yearly incidence",
                             "years since burn-in", "cases per 100k",
                             fans);
    detail::write_file(fs::path(out_dir) / "fan.svg", os.str(), artifacts);
  }

  // Age-incidence bars, one panel per arm, pooled over realizations.
  for (std::size_t a = 0; a < arms.size(); ++a) {
    std::vector<double> counts(bins.size(), 0.0);
    std::vector<double> py(bins.size(), 0.0);
    bool any = false;
    for (uint32_t r = 0; r < cfg.realizations; ++r) {
      const RealizationOutput* out = result_of(a, r);
      if (!out) continue;
      any = true;
      for (int y = 0; y < years; ++y) {
        for (std::size_t b = 0; b < bins.size(); ++b) {
          counts[b] += static_cast<double>(out->primary.at(y, b));
          py[b] += out->person_time.at(y, b);
        }
      }
    }
    if (!any) continue;
    std::vector<std::string> labels;
    std::vector<double> rates;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      labels.push_back(bins.label(b));
      rates.push_back(py[b] > 0.0 ? counts[b] / py[b] * 1e5 : 0.0);
    }
    std::ostringstream os;
    svgplot::write_bar_chart(os, arms[a].name + ": incidence by age",
                             "cases per 100k person-years", labels, rates);
    detail::write_file(
        fs::path(out_dir) / ("age_incidence_" + arms[a].name + ".svg"),
        os.str(), artifacts);
  }

  // Coverage counters.
  {
    std::ostringstream os;
    os << "arm,realization,metric,value\n";
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (uint32_t r = 0; r < cfg.realizations; ++r) {
        const RealizationOutput* out = result_of(a, r);
        if (!out) continue;
        for (const auto& [metric, value] : out->coverage) {
          os << arms[a].name << ',' << r << ',' << metric << ','
             << format_number(value) << '\n';
        }
      }
    }
    detail::write_file(fs::path(out_dir) / "coverage.csv", os.str(),
                       artifacts);
  }

  if (cfg.pack == PackKind::kVaricella) {
    std::vector<EconRow> econ;
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (uint32_t r = 0; r < cfg.realizations; ++r) {
        const RealizationOutput* out = result_of(a, r);
        if (!out) continue;
        double total = 0.0;
        for (const auto& [category, cost] : out->costs) {
          econ.push_back({arms[a].name, r, category, cost, 0.0});
          total += cost;
        }
        econ.push_back({arms[a].name, r, "all", total, out->qalys});
      }
    }
    std::ostringstream os;
    write_econ_csv(os, econ);
    detail::write_file(fs::path(out_dir) / "econ.csv", os.str(), artifacts);
  }

  nlohmann::ordered_json empty_bins = nlohmann::ordered_json::array();
  if (cfg.pack == PackKind::kPertussis) {
    // Contact structure and protection trajectories from realization 0 of
    // the last arm (the intervention when one exists).
    const RealizationOutput* src = nullptr;
    for (std::size_t a = arms.size(); a-- > 0;) {
      const RealizationOutput* out = result_of(a, 0);
      if (out && out->contacts) {
        src = out;
        break;
      }
    }
    if (src) {
      const ContactMatrix& cm = *src->contacts;
      const AgeBins& cb = cm.bins();
      std::vector<ContactRow> rows;
      for (std::size_t i = 0; i < cb.size(); ++i) {
        double row_total = 0.0;
        for (std::size_t j = 0; j < cb.size(); ++j) {
          rows.push_back({cb.label(i), cb.label(j),
                          cm.rate_per_day(i, j, src->contact_person_years)});
          row_total += cm.count(i, j);
        }
        if (row_total == 0.0) empty_bins.push_back(cb.label(i));
      }
      std::ostringstream os;
      write_contact_csv(os, rows);
      detail::write_file(fs::path(out_dir) / "contact_matrix.csv", os.str(),
                         artifacts);

      std::vector<std::string> labels;
      std::vector<double> values;
      for (std::size_t i = 0; i < cb.size(); ++i) {
        labels.push_back(cb.label(i));
        for (std::size_t j = 0; j < cb.size(); ++j) {
          values.push_back(cm.rate_per_day(i, j, src->contact_person_years));
        }
      }
      std::ostringstream heat;
      svgplot::write_heatmap(heat, "emergent daily contact rates", labels,
                             values);
      detail::write_file(fs::path(out_dir) / "contact_matrix.svg",
                         heat.str(), artifacts);
    }

    std::ostringstream os;
    os << "arm,agent,time,active,passive,total\n";
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const RealizationOutput* out = result_of(a, 0);
      if (!out) continue;
      for (const auto& s : out->samples) {
        os << arms[a].name << ',' << s.agent << ',' << format_number(s.t)
           << ',' << format_number(s.active) << ','
           << format_number(s.passive) << ',' << format_number(s.total)
           << '\n';
      }
    }
    detail::write_file(fs::path(out_dir) / "protection_samples.csv",
                       os.str(), artifacts);
  }

  // The manifest carries everything needed to reproduce the run plus
  // everything that must not influence the data files (timing, failures).
  nlohmann::ordered_json manifest;
  manifest["engine_version"] = kEngineVersion;
  manifest["scenario_name"] = cfg.name;
  manifest["pack"] = pack_name(cfg.pack);
  manifest["population"] = cfg.population;
  manifest["burn_in_years"] = cfg.burn_in_years;
  manifest["horizon_years"] = cfg.horizon_years;
  manifest["realizations"] = cfg.realizations;
  manifest["master_seed"] = cfg.master_seed;
  manifest["jobs"] = pool;
  nlohmann::ordered_json arm_names = nlohmann::ordered_json::array();
  for (const auto& arm : arms) arm_names.push_back(arm.name);
  manifest["arms"] = arm_names;
  nlohmann::ordered_json seed_table = nlohmann::ordered_json::array();
  for (uint32_t r = 0; r < cfg.realizations; ++r) {
    seed_table.push_back({{"realization", r},
                          {"master_seed", cfg.master_seed},
                          {"dropped", static_cast<bool>(dropped[r])}});
  }
  manifest["seed_table"] = seed_table;
  manifest["yearly_autocorrelation_lag1"] = autocorr;
  if (cfg.pack == PackKind::kPertussis) {
    manifest["empty_contact_bins"] = empty_bins;
  }
  manifest["failures"] = failures;
  manifest["scenario_text"] = scenario_text;
  manifest["started_utc"] = detail::iso_utc(started);
  manifest["finished_utc"] =
      detail::iso_utc(std::chrono::system_clock::now());
  manifest["artifacts"] = artifacts;

  {
    std::ofstream os(fs::path(out_dir) / "manifest.json", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write manifest.json");
    os << manifest.dump(2) << '\n';
  }

  EnsembleResult res;
  res.ok = failures.empty();
  res.manifest = std::move(manifest);
  return res;
}

}  // namespace epichart::scenario
