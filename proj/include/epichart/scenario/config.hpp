// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
//
// Scenario files: strict JSON with a versioned schema. Every recognized key
// overrides a default; unrecognized keys are errors, because a silently
// ignored typo in a parameter name is the most expensive failure mode a
// batch experiment can have.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "epichart/pertussis/params.hpp"
#include "epichart/population/demographics.hpp"
#include "epichart/varicella/params.hpp"

namespace epichart::scenario {

using nlohmann::json;

// Thrown for every configuration problem; the CLI maps it to exit code 2.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class PackKind { kVaricella, kPertussis };

inline const char* pack_name(PackKind p) {
  return p == PackKind::kVaricella ? "varicella" : "pertussis";
}

struct VzvIntervention {
  bool program = true;
  double start_offset = 0.0;          // years after burn-in end
  std::vector<double> boosting_sweep; // one intervention arm per entry
};

struct PertussisIntervention {
  double start_offset = 0.0;
  double maternal_coverage = 0.5;
  bool blunting = true;
  bool passive_transfer = true;
  std::optional<double> passive_waning_rate;
  std::optional<pertussis::AgeBandValues> ascertainment;
};

// One fully resolved simulation arm. Only the member matching the pack is
// meaningful; the other keeps its defaults and is never run.
struct ArmSpec {
  std::string name;
  varicella::VaricellaParams vzv;
  pertussis::PertussisParams per;
};

struct ScenarioConfig {
  int schema_version = 1;
  std::string name = "scenario";
  PackKind pack = PackKind::kVaricella;
  uint64_t population = 0;
  double burn_in_years = 20.0;
  double horizon_years = 50.0;
  uint32_t realizations = 30;
  uint64_t master_seed = 1;

  DemographicsConfig demo;
  varicella::VaricellaParams vzv;
  pertussis::PertussisParams per;

  bool has_intervention = false;
  VzvIntervention vzv_iv;
  PertussisIntervention per_iv;

  // Reporting grid: yearly bins starting at the end of burn-in.
  int report_years() const {
    return static_cast<int>(horizon_years - burn_in_years + 1e-9);
  }

  std::vector<ArmSpec> arms() const {
    std::vector<ArmSpec> out;
    ArmSpec base;
    base.name = "baseline";
    base.vzv = vzv;
    base.vzv.program_enabled = false;
    base.per = per;
    base.per.maternal_program_enabled = false;
    applied_shared(base);
    out.push_back(base);

    if (!has_intervention) return out;
    if (pack == PackKind::kVaricella) {
      if (!vzv_iv.program) return out;
      auto make_arm = [&](const std::string& label,
                          std::optional<double> duration) {
        ArmSpec arm = base;
        arm.name = label;
        arm.vzv.program_enabled = true;
        arm.vzv.program_start = burn_in_years + vzv_iv.start_offset;
        if (duration) arm.vzv.boosting_duration = *duration;
        out.push_back(arm);
      };
      if (vzv_iv.boosting_sweep.empty()) {
        make_arm("vaccination", std::nullopt);
      } else {
        for (double d : vzv_iv.boosting_sweep) {
          char label[32];
          std::snprintf(label, sizeof(label), "boost_%gy", d);
          make_arm(label, d);
        }
      }
    } else {
      ArmSpec arm = base;
      arm.name = "maternal";
      arm.per.maternal_program_enabled = true;
      arm.per.maternal_program_start = burn_in_years + per_iv.start_offset;
      arm.per.maternal_coverage = per_iv.maternal_coverage;
      arm.per.blunting_enabled = per_iv.blunting;
      arm.per.passive_transfer_enabled = per_iv.passive_transfer;
      out.push_back(arm);
    }
    return out;
  }

  void validate() const {
    if (schema_version != 1) {
      throw ScenarioError("schema_version: only version 1 is understood");
    }
    if (population < 2) {
      throw ScenarioError("population: need at least 2 agents");
    }
    if (!(burn_in_years >= 0.0)) {
      throw ScenarioError("burn_in_years: must be >= 0");
    }
    if (!(horizon_years > burn_in_years)) {
      throw ScenarioError("horizon_years: must exceed burn_in_years");
    }
    if (report_years() < 1) {
      throw ScenarioError(
          "horizon_years: need at least one full reporting year after "
          "burn-in");
    }
    if (realizations < 1) {
      throw ScenarioError("realizations: must be >= 1");
    }
    try {
      demo.validate();
      for (const ArmSpec& arm : arms()) {
        if (pack == PackKind::kVaricella) {
          arm.vzv.validate();
        } else {
          arm.per.validate();
        }
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::exception& e) {
      throw ScenarioError(e.what());
    }
  }

 private:
  // Sensitivity axes that apply to both arms symmetrically.
  void applied_shared(ArmSpec& arm) const {
    if (pack == PackKind::kPertussis && has_intervention) {
      if (per_iv.passive_waning_rate) {
        arm.per.waning.passive = *per_iv.passive_waning_rate;
      }
      if (per_iv.ascertainment) {
        arm.per.ascertainment = *per_iv.ascertainment;
      }
    }
  }
};

namespace detail {

// Strict view over one JSON object: reads mark keys as consumed, and
// `finish` faults on anything left over.
class Obj {
 public:
  Obj(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) {
      throw ScenarioError(ctx_ + ": expected a JSON object");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  void num(const char* key, double& slot) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number()) throw type_error(key, "a number");
    slot = v->get<double>();
  }

  void integer(const char* key, int& slot) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_integer()) throw type_error(key, "an integer");
    slot = v->get<int>();
  }

  void uint32(const char* key, uint32_t& slot) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_integer() || v->get<int64_t>() < 0) {
      throw type_error(key, "a non-negative integer");
    }
    slot = static_cast<uint32_t>(v->get<int64_t>());
  }

  void uint64(const char* key, uint64_t& slot) {
    const json* v = take(key);
    if (!v) return;
    if (!(v->is_number_integer() || v->is_number_unsigned()) ||
        (v->is_number_integer() && v->get<int64_t>() < 0)) {
      throw type_error(key, "a non-negative integer");
    }
    slot = v->get<uint64_t>();
  }

  void boolean(const char* key, bool& slot) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_boolean()) throw type_error(key, "true or false");
    slot = v->get<bool>();
  }

  void text(const char* key, std::string& slot) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_string()) throw type_error(key, "a string");
    slot = v->get<std::string>();
  }

  void numbers(const char* key, std::vector<double>& slot) {
    const json* v = take(key);
    if (!v) return;
    slot = number_list(*v, key);
  }

  template <std::size_t N>
  void fixed(const char* key, std::array<double, N>& slot) {
    const json* v = take(key);
    if (!v) return;
    std::vector<double> vals = number_list(*v, key);
    if (vals.size() != N) {
      throw ScenarioError(path(key) + ": expected exactly " +
                          std::to_string(N) + " numbers");
    }
    std::copy(vals.begin(), vals.end(), slot.begin());
  }

  void bands(const char* key, pertussis::AgeBandValues& slot) {
    const json* v = take(key);
    if (!v) return;
    slot = band_values(*v, key);
  }

  void hazards(const char* key, HazardTable& slot) {
    const json* v = take(key);
    if (!v) return;
    Obj o(*v, path(key));
    o.numbers("edges", slot.edges);
    o.numbers("hazards", slot.hazards);
    o.finish();
  }

  // Returns the raw subobject for nested readers; nullptr when absent.
  const json* object(const char* key) {
    const json* v = take(key);
    if (!v) return nullptr;
    if (!v->is_object()) throw type_error(key, "an object");
    return v;
  }

  pertussis::AgeBandValues band_values(const json& v, const char* key) {
    Obj o(v, path(key));
    pertussis::AgeBandValues out;
    o.numbers("edges", out.edges);
    o.numbers("values", out.values);
    o.finish();
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        throw ScenarioError(path(it.key().c_str()) + ": unknown key");
      }
    }
  }

  std::string path(const char* key) const {
    return ctx_.empty() ? std::string(key) : ctx_ + "." + key;
  }

 private:
  const json* take(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.push_back(key);
    return &j_.at(key);
  }

  ScenarioError type_error(const char* key, const char* want) const {
    return ScenarioError(path(key) + ": expected " + want);
  }

  std::vector<double> number_list(const json& v, const char* key) const {
    if (!v.is_array()) {
      throw ScenarioError(path(key) + ": expected an array of numbers");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
      if (!e.is_number()) {
        throw ScenarioError(path(key) + ": expected an array of numbers");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  const json& j_;
  std::string ctx_;
  std::vector<std::string> seen_;
};

inline void read_demographics(const json& j, DemographicsConfig& d) {
  Obj o(j, "demographics");
  o.hazards("mortality", d.mortality);
  o.hazards("fertility", d.fertility);
  o.numbers("parity_multipliers", d.parity_multipliers);
  o.num("gestation_years", d.gestation_years);
  o.num("postpartum_years", d.postpartum_years);
  o.num("school_entry_age", d.school_entry_age);
  o.num("school_exit_age", d.school_exit_age);
  o.num("school_size", d.school_size);
  o.integer("school_count", d.school_count);
  o.num("home_leaving_min", d.home_leaving_min);
  o.num("home_leaving_max", d.home_leaving_max);
  o.num("couple_fraction", d.couple_fraction);
  o.num("couple_household_weight", d.couple_household_weight);
  o.numbers("couple_child_weights", d.couple_child_weights);
  o.numbers("single_child_weights", d.single_child_weights);
  o.num("urban_density", d.urban_density);
  o.num("rural_density", d.rural_density);
  o.num("urban_population_share", d.urban_population_share);
  o.numbers("attitude_weights", d.attitude_weights);
  o.num("acceptance_beta_a", d.acceptance_beta_a);
  o.num("acceptance_beta_b", d.acceptance_beta_b);
  o.finish();
}

inline void read_varicella(const json& j, varicella::VaricellaParams& p) {
  Obj o(j, "params");
  for (const char* key : {"program_enabled", "program_start"}) {
    if (o.has(key)) {
      throw ScenarioError(std::string("params.") + key +
                          ": the vaccination program is configured through "
                          "the intervention block");
    }
  }
  o.num("contact_rate_normal", p.contact_rate_normal);
  o.num("contact_rate_preferential", p.contact_rate_preferential);
  o.num("contact_range_normal", p.contact_range_normal);
  o.num("contact_range_preferential", p.contact_range_preferential);
  o.num("preferential_age_lo", p.preferential_age_lo);
  o.num("preferential_age_hi", p.preferential_age_hi);
  o.num("shingles_contact_rate", p.shingles_contact_rate);
  o.num("shingles_range_modifier", p.shingles_range_modifier);
  o.num("p_infect_normal", p.p_infect_normal);
  o.num("p_infect_shingles", p.p_infect_shingles);
  o.num("p_infect_breakthrough", p.p_infect_breakthrough);
  o.num("exogenous_boost_rate", p.exogenous_boost_rate);
  o.num("exogenous_reference_prev", p.exogenous_reference_prev);
  o.num("importation_rate", p.importation_rate);
  o.num("cmi_initial_mean", p.cmi_initial_mean);
  o.num("cmi_initial_sd", p.cmi_initial_sd);
  o.num("cmi_floor", p.cmi_floor);
  o.num("cmi_waning_rate", p.cmi_waning_rate);
  o.num("waning_coeff_lo", p.waning_coeff_lo);
  o.num("waning_coeff_hi", p.waning_coeff_hi);
  o.num("reactivation_shape", p.reactivation_shape);
  o.num("reactivation_scale", p.reactivation_scale);
  o.num("reactivation_k", p.reactivation_k);
  o.num("boosting_duration", p.boosting_duration);
  o.num("maternal_protection_duration", p.maternal_protection_duration);
  o.num("latent_duration", p.latent_duration);
  o.num("infectious_duration", p.infectious_duration);
  o.num("symptomatic_duration", p.symptomatic_duration);
  o.num("shingles_duration", p.shingles_duration);
  o.num("phn_duration", p.phn_duration);
  o.num("p_phn", p.p_phn);
  o.num("relapse_rate", p.relapse_rate);
  o.num("case_fatality", p.case_fatality);
  o.num("waning_one_dose", p.waning_one_dose);
  o.num("waning_two_dose", p.waning_two_dose);
  o.num("dose1_age", p.dose1_age);
  o.num("dose2_age", p.dose2_age);
  o.fixed("dose1_prob", p.dose1_prob);
  o.fixed("dose2_prob", p.dose2_prob);
  o.num("primary_failure_1", p.primary_failure_1);
  o.num("primary_failure_2", p.primary_failure_2);
  o.boolean("catch_up_enabled", p.catch_up_enabled);
  o.num("catch_up_prob", p.catch_up_prob);
  o.num("init_foi", p.init_foi);
  o.num("seed_prevalence", p.seed_prevalence);
  o.num("init_boost_spread", p.init_boost_spread);
  o.num("cost_per_dose", p.cost_per_dose);
  o.num("cost_gp_visit", p.cost_gp_visit);
  o.num("cost_ed_visit", p.cost_ed_visit);
  o.num("cost_hospital_day", p.cost_hospital_day);
  o.num("cost_personal", p.cost_personal);
  o.num("cost_productivity", p.cost_productivity);
  o.num("p_gp_chickenpox", p.p_gp_chickenpox);
  o.num("p_ed_chickenpox", p.p_ed_chickenpox);
  o.num("hospital_days_chickenpox", p.hospital_days_chickenpox);
  o.num("p_gp_shingles", p.p_gp_shingles);
  o.num("p_ed_shingles", p.p_ed_shingles);
  o.num("hospital_days_phn", p.hospital_days_phn);
  o.num("utility_healthy", p.utility_healthy);
  o.num("utility_chickenpox", p.utility_chickenpox);
  o.num("utility_shingles", p.utility_shingles);
  o.num("utility_phn", p.utility_phn);
  o.num("discount_rate", p.discount_rate);
  o.finish();
}

inline void read_pertussis(const json& j, pertussis::PertussisParams& p) {
  Obj o(j, "params");
  for (const char* key :
       {"maternal_program_enabled", "maternal_program_start",
        "maternal_coverage", "blunting_enabled", "passive_transfer_enabled"}) {
    if (o.has(key)) {
      throw ScenarioError(std::string("params.") + key +
                          ": maternal immunization is configured through "
                          "the intervention block");
    }
  }
  o.num("p_transmission", p.p_transmission);
  o.bands("alpha", p.alpha);
  o.num("waning_natural", p.waning.natural);
  o.num("waning_whole_cell", p.waning.whole_cell);
  o.num("waning_acellular", p.waning.acellular);
  o.num("waning_passive", p.waning.passive);
  o.text("vaccine_type", p.vaccine_type);
  o.numbers("schedule", p.schedule);
  o.numbers("dose_targets", p.dose_targets);
  o.num("catch_up_window", p.catch_up_window);
  o.num("maternal_dose_target", p.maternal_dose_target);
  o.num("transfer_fraction", p.transfer_fraction);
  o.num("blunting", p.blunting);
  o.integer("blunting_dose_cutoff", p.blunting_dose_cutoff);
  o.num("passive_present_threshold", p.passive_present_threshold);
  o.num("compliance_out_scale", p.compliance_out_scale);
  o.num("compliance_in_scale", p.compliance_in_scale);
  o.num("latent_duration", p.latent_duration);
  o.num("infectious_duration", p.infectious_duration);
  o.num("household_contact_rate", p.household_contact_rate);
  o.num("school_contact_rate", p.school_contact_rate);
  o.num("background_contact_rate", p.background_contact_rate);
  o.num("background_radius", p.background_radius);
  o.num("importation_rate", p.importation_rate);
  o.bands("ascertainment", p.ascertainment);
  o.num("init_foi", p.init_foi);
  o.num("init_active_lo", p.init_active_lo);
  o.num("init_active_hi", p.init_active_hi);
  o.num("seed_prevalence", p.seed_prevalence);
  o.uint32("sample_infants", p.sample_infants);
  o.num("sample_start", p.sample_start);
  o.num("sample_years", p.sample_years);
  o.num("samples_per_year", p.samples_per_year);
  o.finish();
}

inline void read_intervention(const json& j, ScenarioConfig& cfg) {
  cfg.has_intervention = true;
  Obj o(j, "intervention");
  if (cfg.pack == PackKind::kVaricella) {
    o.boolean("program", cfg.vzv_iv.program);
    o.num("start_offset_years", cfg.vzv_iv.start_offset);
    o.numbers("boosting_sweep", cfg.vzv_iv.boosting_sweep);
  } else {
    o.num("start_offset_years", cfg.per_iv.start_offset);
    o.num("maternal_coverage", cfg.per_iv.maternal_coverage);
    o.boolean("blunting", cfg.per_iv.blunting);
    o.boolean("passive_transfer", cfg.per_iv.passive_transfer);
    if (o.has("passive_waning_rate")) {
      double v = 0.0;
      o.num("passive_waning_rate", v);
      cfg.per_iv.passive_waning_rate = v;
    }
    if (o.has("ascertainment")) {
      pertussis::AgeBandValues bands;
      o.bands("ascertainment", bands);
      cfg.per_iv.ascertainment = bands;
    }
  }
  o.finish();
}

inline std::string line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return std::to_string(line);
}

}  // namespace detail

inline ScenarioConfig parse_scenario_text(const std::string& text,
                                          const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(origin + ":" + detail::line_of(text, e.byte) +
                        ": " + e.what());
  }

  ScenarioConfig cfg;
  try {
    detail::Obj o(root, "");
    o.integer("schema_version", cfg.schema_version);
    o.text("name", cfg.name);

    std::string pack;
    o.text("pack", pack);
    if (pack == "varicella") {
      cfg.pack = PackKind::kVaricella;
    } else if (pack == "pertussis") {
      cfg.pack = PackKind::kPertussis;
    } else if (pack.empty()) {
      throw ScenarioError("pack: required, varicella or pertussis");
    } else {
      throw ScenarioError("pack: expected varicella or pertussis, got '" +
                          pack + "'");
    }

    o.uint64("population", cfg.population);
    o.num("burn_in_years", cfg.burn_in_years);
    o.num("horizon_years", cfg.horizon_years);
    o.uint32("realizations", cfg.realizations);
    o.uint64("master_seed", cfg.master_seed);

    if (const json* d = o.object("demographics")) {
      detail::read_demographics(*d, cfg.demo);
    }
    if (const json* p = o.object("params")) {
      if (cfg.pack == PackKind::kVaricella) {
        detail::read_varicella(*p, cfg.vzv);
      } else {
        detail::read_pertussis(*p, cfg.per);
      }
    }
    if (const json* iv = o.object("intervention")) {
      detail::read_intervention(*iv, cfg);
    }
    o.finish();
    cfg.validate();
  } catch (const ScenarioError& e) {
    throw ScenarioError(origin + ": " + e.what());
  }
  return cfg;
}

inline ScenarioConfig parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScenarioError(path + ": cannot open scenario file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

}  // namespace epichart::scenario
