// Pertussis model parameters. The protection mechanics (waning, dose
// targets, maternal transfer) are the load-bearing part; contact-layer
// rates and the compliance hazards are calibration defaults that scenario
// files are expected to override for specific study designs.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "epichart/pertussis/immunity.hpp"

namespace epichart::pertussis {

// Step function over age, used for the protection threshold and the
// ascertainment table. Bands start at each edge; queries below the first
// edge take the first value.
struct AgeBandValues {
  std::vector<double> edges;
  std::vector<double> values;

  double at(double age) const {
    std::size_t band = 0;
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (age >= edges[i]) band = i;
    }
    return values[band];
  }

  void validate(const char* what) const {
    if (edges.empty() || edges.size() != values.size()) {
      throw std::invalid_argument(std::string(what) +
                                  ": edges/values size mismatch");
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (!(edges[i] > edges[i - 1])) {
        throw std::invalid_argument(std::string(what) +
                                    ": edges must increase");
      }
    }
  }
};

struct PertussisParams {
  // -- exposure ---------------------------------------------------------------
  double p_transmission = 0.8;  // pi: infection probability given exposure
  // Protection threshold: exposure can only infect when current protection
  // sits below this level. Single global band by default.
  AgeBandValues alpha{{0.0}, {0.3}};

  // -- immunity ----------------------------------------------------------------
  WaningRates waning;           // natural 0.04, wholeCell 0.08, acellular 0.12
  std::string vaccine_type = "acellular";  // or "wholeCell"
  // Dose schedule (ages, years) and post-dose active-protection targets.
  std::vector<double> schedule{2.0 / 12, 4.0 / 12, 6.0 / 12, 1.5, 4.0, 14.0};
  std::vector<double> dose_targets{0.5, 0.65, 0.8, 0.9, 0.95, 0.98};
  // Missed doses are caught up while the agent is on schedule, as long as
  // the dose is at most this many years overdue.
  double catch_up_window = 6.0;

  // -- maternal immunization -----------------------------------------------------
  bool maternal_program_enabled = false;
  double maternal_program_start = 0.0;
  double maternal_coverage = 0.5;       // third-trimester dose probability
  double maternal_dose_target = 0.95;   // mother's p_active after the dose
  double transfer_fraction = 0.9;       // m: infant passive = m * mother total
  bool passive_transfer_enabled = true;
  bool blunting_enabled = true;
  double blunting = 0.7;                // scale on early-dose targets
  int blunting_dose_cutoff = 3;         // doses 1..cutoff are blunted
  double passive_present_threshold = 0.01;

  // -- compliance ---------------------------------------------------------------
  // onSchedule -> nonCompliant at out_scale*(1-u); back at in_scale*u,
  // where u is the household-effective acceptance (min over parents).
  // Calibrated so dose-4 coverage at age 3 lands in the 70-80% band under
  // the default acceptance distribution.
  double compliance_out_scale = 1.6;  // per year
  double compliance_in_scale = 0.5;   // per year

  // -- natural history -----------------------------------------------------------
  double latent_duration = 8.0 / 365.25;
  double infectious_duration = 21.0 / 365.25;

  // -- contact layers --------------------------------------------------------------
  double household_contact_rate = 18.0;  // per year while infectious
  double school_contact_rate = 12.0;     // per year, enrolled sources only
  double background_contact_rate = 12.0; // per year over the radius ball
  double background_radius = 8.958;      // distance units

  // Case importation, whole-population Poisson; exposes one random living
  // agent per event. Zero disables.
  double importation_rate = 0.0;

  // -- reporting -------------------------------------------------------------------
  // Probability a true case is ascertained, by age band. Infants are far
  // more likely to present than (often asymptomatic) adults.
  AgeBandValues ascertainment{{0.0, 1.0, 5.0, 15.0}, {0.9, 0.6, 0.4, 0.12}};

  // -- initial immune profile ---------------------------------------------------------
  // Initial agents carry synthetic natural immunity with probability
  // 1-exp(-init_foi*age); burn-in re-equilibrates the profile.
  double init_foi = 0.1;
  double init_active_lo = 0.3;
  double init_active_hi = 1.0;
  double seed_prevalence = 0.005;

  // -- protection trajectory sampling ----------------------------------------------------
  uint32_t sample_infants = 0;     // newborns to trace (0 disables)
  double sample_start = 0.0;       // earliest birth time traced
  double sample_years = 2.0;       // trace span per agent
  double samples_per_year = 24.0;

  MemoryType vaccine_memory() const {
    if (vaccine_type == "acellular") return MemoryType::kAcellular;
    if (vaccine_type == "wholeCell") return MemoryType::kWholeCell;
    throw std::invalid_argument("vaccine_type must be acellular or wholeCell");
  }

  void validate() const {
    auto prob = [](double p, const char* what) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(what) +
                                    " must lie in [0, 1]");
      }
    };
    auto nonneg = [](double v, const char* what) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) +
                                    " must be finite and >= 0");
      }
    };
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) +
                                    " must be finite and > 0");
      }
    };

    prob(p_transmission, "p_transmission");
    alpha.validate("alpha");
    for (double v : alpha.values) prob(v, "alpha");
    waning.validate();
    (void)vaccine_memory();

    if (schedule.empty() || schedule.size() > 8 ||
        schedule.size() != dose_targets.size()) {
      throw std::invalid_argument(
          "schedule needs 1..8 doses with matching targets");
    }
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      positive(schedule[i], "schedule age");
      if (i > 0 && !(schedule[i] > schedule[i - 1])) {
        throw std::invalid_argument("schedule ages must increase");
      }
      if (!(dose_targets[i] > 0.0 && dose_targets[i] <= 1.0)) {
        throw std::invalid_argument("dose targets must lie in (0, 1]");
      }
    }
    positive(catch_up_window, "catch_up_window");

    prob(maternal_coverage, "maternal_coverage");
    prob(maternal_dose_target, "maternal_dose_target");
    prob(transfer_fraction, "transfer_fraction");
    prob(blunting, "blunting");
    if (blunting_dose_cutoff < 0 ||
        blunting_dose_cutoff > static_cast<int>(schedule.size())) {
      throw std::invalid_argument("blunting_dose_cutoff out of range");
    }
    nonneg(passive_present_threshold, "passive_present_threshold");

    nonneg(compliance_out_scale, "compliance_out_scale");
    nonneg(compliance_in_scale, "compliance_in_scale");

    positive(latent_duration, "latent_duration");
    positive(infectious_duration, "infectious_duration");

    nonneg(household_contact_rate, "household_contact_rate");
    nonneg(school_contact_rate, "school_contact_rate");
    nonneg(background_contact_rate, "background_contact_rate");
    positive(background_radius, "background_radius");
    nonneg(importation_rate, "importation_rate");

    ascertainment.validate("ascertainment");
    for (double v : ascertainment.values) prob(v, "ascertainment");

    nonneg(init_foi, "init_foi");
    prob(seed_prevalence, "seed_prevalence");
    if (!(init_active_lo >= 0.0 && init_active_hi <= 1.0 &&
          init_active_lo <= init_active_hi)) {
      throw std::invalid_argument("init active range must sit inside [0, 1]");
    }

    nonneg(sample_start, "sample_start");
    positive(sample_years, "sample_years");
    positive(samples_per_year, "samples_per_year");
  }
};

}  // namespace epichart::pertussis
