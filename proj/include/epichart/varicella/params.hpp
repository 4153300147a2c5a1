// Varicella/zoster model parameters. Defaults describe the full-scale
// configuration; scenario files override the contact and importation rates
// when running the small desk-scale populations used by the test suite.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace epichart::varicella {

struct VaricellaParams {
  // -- transmission ---------------------------------------------------------
  // Contact processes emit exposure events at these per-agent rates while
  // infectious. "normal" pairs the source with any neighbour in range;
  // "preferential" models playground mixing and only fires for child
  // sources, targeting child neighbours in a wider radius.
  double contact_rate_normal = 30.124;       // per year
  double contact_rate_preferential = 20.0;   // per year
  double contact_range_normal = 8.958;       // distance units
  double contact_range_preferential = 21.245;
  double preferential_age_lo = 1.0;          // years, inclusive
  double preferential_age_hi = 9.0;          // years, inclusive of the band
  // Shingles cases shed virus too, over a much shorter reach.
  double shingles_contact_rate = 30.124;     // per year
  double shingles_range_modifier = 0.124;    // fraction of normal range

  // Infection probability per exposure event received.
  double p_infect_normal = 0.78;        // susceptible, chickenpox source
  double p_infect_shingles = 0.234;     // susceptible, shingles source
  double p_infect_breakthrough = 0.234; // one-dose recipient, any source

  // Ambient re-exposure that boosts recovered agents without a named
  // contact. Thinned by current chickenpox prevalence relative to
  // `exogenous_reference_prev` so that boosting collapses when circulation
  // does. Zero disables the process.
  double exogenous_boost_rate = 17.83;  // per year at reference prevalence
  double exogenous_reference_prev = 0.01;

  // Case importation, whole-population Poisson process; each event exposes
  // one uniformly drawn living agent. Keeps small populations endemic.
  double importation_rate = 0.0;  // per year

  // -- immunity and reactivation --------------------------------------------
  // Per-person cell-mediated immunity: initial level ~ max(floor, N(mu,sd)),
  // waning at waning_rate * coeff with coeff ~ U(lo, hi). Reactivation
  // hazard is force_of_reactivation * exp(-k * cmi), silenced entirely for
  // `boosting_duration` years after each boost.
  double cmi_initial_mean = 0.05;
  double cmi_initial_sd = 1.0;
  double cmi_floor = 0.001;
  double cmi_waning_rate = 0.4;          // per year
  double waning_coeff_lo = 0.45;
  double waning_coeff_hi = 0.93;
  double reactivation_shape = 2.0;       // gamma shape of force of reactivation
  double reactivation_scale = 0.1;       // gamma scale
  double reactivation_k = 3.0;           // hazard suppression per unit cmi
  double boosting_duration = 5.0;        // years of full protection per boost

  // -- natural history durations (years) ------------------------------------
  double maternal_protection_duration = 0.5;
  double latent_duration = 14.0 / 365.25;
  double infectious_duration = 7.0 / 365.25;
  double symptomatic_duration = 5.0 / 365.25;
  double shingles_duration = 30.0 / 365.25;
  double phn_duration = 0.5;
  double p_phn = 0.15;            // probability an episode ends in PHN
  double relapse_rate = 0.01;     // recoveredShingles -> shinglesMild, per year
  double case_fatality = 1e-4;    // per chickenpox episode

  // One-dose vaccine protection wanes back to susceptible at this rate;
  // two doses protect for life.
  double waning_one_dose = 0.02;  // per year
  double waning_two_dose = 0.0;

  // -- vaccination program ---------------------------------------------------
  bool program_enabled = false;
  double program_start = 0.0;     // simulation time doses begin
  double dose1_age = 1.0;         // years
  double dose2_age = 4.5;
  // Administration probability by vaccine attitude {supportive, hesitant,
  // refusing}; draws happen only while the program is active.
  std::array<double, 3> dose1_prob{0.97, 0.30, 0.05};
  std::array<double, 3> dose2_prob{0.98, 0.82, 0.33};
  double primary_failure_1 = 0.20;   // administered dose confers nothing
  double primary_failure_2 = 0.105;
  bool catch_up_enabled = true;
  double catch_up_prob = 0.55;       // offered when dose two lands but dose
                                     // one was missed

  // -- initial immune profile -------------------------------------------------
  // Probability an initial agent of age a has already had chickenpox:
  // 1 - exp(-init_foi * a). Seed prevalence converts that many remaining
  // susceptibles into infectious cases at t = 0.
  double init_foi = 0.12;
  double seed_prevalence = 0.005;
  // Recovered initial agents get a synthetic last-boost time drawn from
  // U(-init_boost_spread, 0); burn-in re-equilibrates the distribution.
  double init_boost_spread = 10.0;

  // -- economics --------------------------------------------------------------
  // All costs default to zero; scenarios doing cost-effectiveness set them.
  double cost_per_dose = 0.0;
  double cost_gp_visit = 0.0;
  double cost_ed_visit = 0.0;
  double cost_hospital_day = 0.0;
  double cost_personal = 0.0;
  double cost_productivity = 0.0;
  // Per-episode resource draws, charged at episode onset.
  double p_gp_chickenpox = 1.0;
  double p_ed_chickenpox = 0.0;
  double hospital_days_chickenpox = 0.0;
  double p_gp_shingles = 1.0;
  double p_ed_shingles = 0.0;
  double hospital_days_phn = 0.0;
  // Health-state utilities; QALYs integrate utility over time, discounted
  // continuously at `discount_rate` from the reporting anchor.
  double utility_healthy = 1.0;
  double utility_chickenpox = 1.0;
  double utility_shingles = 1.0;
  double utility_phn = 1.0;
  double discount_rate = 0.03;  // per year

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

    nonneg(contact_rate_normal, "contact_rate_normal");
    nonneg(contact_rate_preferential, "contact_rate_preferential");
    nonneg(shingles_contact_rate, "shingles_contact_rate");
    positive(contact_range_normal, "contact_range_normal");
    positive(contact_range_preferential, "contact_range_preferential");
    positive(shingles_range_modifier, "shingles_range_modifier");
    if (preferential_age_lo < 0.0 ||
        preferential_age_hi < preferential_age_lo) {
      throw std::invalid_argument("preferential age band is inverted");
    }
    prob(p_infect_normal, "p_infect_normal");
    prob(p_infect_shingles, "p_infect_shingles");
    prob(p_infect_breakthrough, "p_infect_breakthrough");
    nonneg(exogenous_boost_rate, "exogenous_boost_rate");
    positive(exogenous_reference_prev, "exogenous_reference_prev");
    nonneg(importation_rate, "importation_rate");

    positive(cmi_floor, "cmi_floor");
    nonneg(cmi_waning_rate, "cmi_waning_rate");
    if (!(waning_coeff_lo >= 0.45 && waning_coeff_hi <= 0.93 &&
          waning_coeff_lo <= waning_coeff_hi)) {
      throw std::invalid_argument(
          "waning coefficient range must sit inside [0.45, 0.93]");
    }
    positive(reactivation_shape, "reactivation_shape");
    positive(reactivation_scale, "reactivation_scale");
    nonneg(reactivation_k, "reactivation_k");
    if (!(boosting_duration >= 0.42 && boosting_duration <= 10.0)) {
      throw std::invalid_argument(
          "boosting_duration must lie in [0.42, 10] years");
    }

    positive(maternal_protection_duration, "maternal_protection_duration");
    positive(latent_duration, "latent_duration");
    positive(infectious_duration, "infectious_duration");
    positive(symptomatic_duration, "symptomatic_duration");
    positive(shingles_duration, "shingles_duration");
    positive(phn_duration, "phn_duration");
    prob(p_phn, "p_phn");
    nonneg(relapse_rate, "relapse_rate");
    prob(case_fatality, "case_fatality");
    nonneg(waning_one_dose, "waning_one_dose");
    nonneg(waning_two_dose, "waning_two_dose");

    positive(dose1_age, "dose1_age");
    if (!(dose2_age > dose1_age)) {
      throw std::invalid_argument("dose2_age must exceed dose1_age");
    }
    for (double p : dose1_prob) prob(p, "dose1_prob");
    for (double p : dose2_prob) prob(p, "dose2_prob");
    if (!(primary_failure_1 >= 0.16 && primary_failure_1 <= 0.24)) {
      throw std::invalid_argument(
          "primary_failure_1 must lie in [0.16, 0.24]");
    }
    if (!(primary_failure_2 >= 0.05 && primary_failure_2 <= 0.16)) {
      throw std::invalid_argument(
          "primary_failure_2 must lie in [0.05, 0.16]");
    }
    prob(catch_up_prob, "catch_up_prob");

    nonneg(init_foi, "init_foi");
    prob(seed_prevalence, "seed_prevalence");
    nonneg(init_boost_spread, "init_boost_spread");

    nonneg(cost_per_dose, "cost_per_dose");
    nonneg(cost_gp_visit, "cost_gp_visit");
    nonneg(cost_ed_visit, "cost_ed_visit");
    nonneg(cost_hospital_day, "cost_hospital_day");
    nonneg(cost_personal, "cost_personal");
    nonneg(cost_productivity, "cost_productivity");
    prob(p_gp_chickenpox, "p_gp_chickenpox");
    prob(p_ed_chickenpox, "p_ed_chickenpox");
    nonneg(hospital_days_chickenpox, "hospital_days_chickenpox");
    prob(p_gp_shingles, "p_gp_shingles");
    prob(p_ed_shingles, "p_ed_shingles");
    nonneg(hospital_days_phn, "hospital_days_phn");
    prob(utility_healthy, "utility_healthy");
    prob(utility_chickenpox, "utility_chickenpox");
    prob(utility_shingles, "utility_shingles");
    prob(utility_phn, "utility_phn");
    nonneg(discount_rate, "discount_rate");
  }
};

}  // namespace epichart::varicella
