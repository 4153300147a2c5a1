// Varicella/zoster model pack: wires the natural-history, aging and
// vaccine-adherence charts onto a synthetic population and runs the spatial
// contact processes between them. One instance owns one realization's
// disease-side agent state; construct it in place and keep it alive for the
// whole run (chart callbacks capture `this`).
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "epichart/core/simulation.hpp"
#include "epichart/metrics/events.hpp"
#include "epichart/population/demographics.hpp"
#include "epichart/statechart/chart.hpp"
#include "epichart/varicella/params.hpp"

namespace epichart::varicella {

// Natural-history state indices, fixed by construction order.
namespace nh {
inline constexpr int kMaternal = 0;
inline constexpr int kSusceptible = 1;
inline constexpr int kVaccinatedOne = 2;
inline constexpr int kVaccinatedTwo = 3;
inline constexpr int kBreakthrough = 4;
inline constexpr int kInfectedWeak = 5;
inline constexpr int kInfectedFull = 6;
inline constexpr int kInfectiousCP = 7;
inline constexpr int kSymptomatic = 8;
inline constexpr int kRecoveredCP = 9;
inline constexpr int kShinglesMild = 10;
inline constexpr int kShinglesPHN = 11;
inline constexpr int kRecoveredShingles = 12;
inline constexpr int kCount = 13;
}  // namespace nh

// Adherence state indices.
namespace adh {
inline constexpr int kTooYoung = 0;
inline constexpr int kDueFirst = 1;
inline constexpr int kReceivedFirst = 2;
inline constexpr int kMissedFirst = 3;
inline constexpr int kDueSecond = 4;
inline constexpr int kReceivedSecond = 5;
inline constexpr int kMissedSecond = 6;
inline constexpr int kCatchUp = 7;
inline constexpr int kCount = 8;
}  // namespace adh

// Message kinds used by this pack.
namespace msg {
inline constexpr MessageKind kExposureCP = 1;
inline constexpr MessageKind kExposureBreakthrough = 2;
inline constexpr MessageKind kExposureShingles = 3;
inline constexpr MessageKind kDose1Success = 4;
inline constexpr MessageKind kDose2Success = 5;
inline constexpr MessageKind kFatality = 6;
// Adherence bookkeeping, sent to self by the due-state entry hooks.
inline constexpr MessageKind kAdhGot1 = 7;
inline constexpr MessageKind kAdhMiss1 = 8;
inline constexpr MessageKind kAdhGot2 = 9;
inline constexpr MessageKind kAdhMiss2 = 10;
inline constexpr MessageKind kAdhCatchUp = 11;
}  // namespace msg

// Chart slots, fixed by attach order.
inline constexpr uint16_t kNhSlot = 0;
inline constexpr uint16_t kAgingSlot = 1;
inline constexpr uint16_t kAdherenceSlot = 2;

// Accrual tags for health states with a utility weight.
inline constexpr int kTagChickenpox = 1;
inline constexpr int kTagShingles = 2;
inline constexpr int kTagPhn = 3;

enum class EconCategory : int {
  kVaccineDose = 0,
  kGpVisit = 1,
  kEdVisit = 2,
  kHospitalDay = 3,
  kPersonal = 4,
  kProductivity = 5,
};
inline constexpr int kEconCategoryCount = 6;

inline const char* econ_category_name(int c) {
  switch (static_cast<EconCategory>(c)) {
    case EconCategory::kVaccineDose: return "vaccine_dose";
    case EconCategory::kGpVisit: return "gp_visit";
    case EconCategory::kEdVisit: return "ed_visit";
    case EconCategory::kHospitalDay: return "hospital_day";
    case EconCategory::kPersonal: return "personal_expense";
    case EconCategory::kProductivity: return "productivity_loss";
  }
  return "?";
}

class VzvPack {
 public:
  // Per-agent disease-side state. cmi wanes from cmi_at_boost starting at
  // last_boost; reactivation is silenced inside the boosting window.
  struct AgentDisease {
    float cmi_init = 0.0f;
    float coeff = 0.0f;      // personal waning coefficient
    float for_rate = 0.0f;   // personal force of reactivation (= thinning bound)
    float cmi_at_boost = 0.0f;
    double last_boost = -1e300;
    bool phn_pending = false;
    bool missed_first = false;
  };

  struct DoseDecision {
    bool administered = false;
    bool success = false;  // administered and no primary failure
  };

  // The per-child dose decision, exposed for direct Monte-Carlo checks.
  // Draws happen on the vaccination stream only when called, which is why
  // callers must gate this on the program being active.
  static DoseDecision decide_dose(RngRegistry& rng, Attitude att,
                                  const std::array<double, 3>& admin_prob,
                                  double primary_failure) {
    DoseDecision d;
    d.administered =
        rng.bernoulli(Stream::kVaccination,
                      admin_prob[static_cast<std::size_t>(att)]);
    if (d.administered) {
      d.success = !rng.bernoulli(Stream::kVaccination, primary_failure);
    }
    return d;
  }

  VzvPack(Simulation& sim, const VaricellaParams& params,
          const DemographicsConfig& demo, EventLog* log = nullptr,
          double discount_anchor = 0.0)
      : sim_(sim),
        params_(params),
        demo_(demo),
        log_(log),
        anchor_(discount_anchor),
        nh_chart_("vzvNaturalHistory"),
        adherence_("vzvAdherence"),
        aging_female_("aging"),
        aging_male_("aging") {
    params_.validate();
    demo_.validate();
    costs_.fill(0.0);
    build_natural_history();
    build_adherence();
    build_aging();
    sim_.set_accrual_sink([this](AgentId, int tag, double t0, double t1) {
      on_accrual(tag, t0, t1);
    });
  }

  VzvPack(const VzvPack&) = delete;
  VzvPack& operator=(const VzvPack&) = delete;

  // Builds the starting population and attaches every chart. Must run at
  // simulation time zero, before any events.
  void init_world(uint64_t n) {
    double cell = std::max(4.0, params_.contact_range_normal);
    InitStats stats = init_population(sim_, n, demo_, cell);
    life_.emplace(sim_, demo_, stats.region);

    Population& pop = sim_.population();
    RngRegistry& rng = sim_.rng();
    for (AgentId a = 0; a < pop.size(); ++a) {
      attach_init(a);
      life_->attach(a);
    }

    if (params_.importation_rate > 0.0) {
      import_hook_ = sim_.register_hook(
          [this](Simulation& s, AgentId, double t) { run_importation(s, t); });
      double dt = rng.exponential(Stream::kTransmission,
                                  params_.importation_rate);
      sim_.schedule_hook(dt, import_hook_);
    }
  }

  // Attaches pack charts to one newborn. Call after process_birth.
  void attach_newborn(AgentId child) {
    draw_disease_constants(child);
    const PersonAgent& p = sim_.population().agent(child);
    sim_.add_chart(child, &nh_chart_, nh::kMaternal);
    sim_.add_chart(child, p.sex == Sex::kFemale ? &aging_female_
                                                : &aging_male_);
    sim_.add_chart(child, &adherence_, adh::kTooYoung);
    if (log_) log_->record(LogEvent::kBirth, child, sim_.now(), 0.0);
  }

  // -- accessors -------------------------------------------------------------
  const VaricellaParams& params() const { return params_; }
  const ChartDefinition& natural_history() const { return nh_chart_; }
  const ChartDefinition& adherence() const { return adherence_; }
  const ChartDefinition& aging_female() const { return aging_female_; }
  const ChartDefinition& aging_male() const { return aging_male_; }
  const AgentDisease& disease(AgentId a) const { return disease_[a]; }
  LifeCourse* life() { return life_ ? &*life_ : nullptr; }

  uint64_t dose1_eligible() const { return dose1_eligible_; }
  uint64_t dose1_administered() const { return dose1_administered_; }
  uint64_t dose2_eligible() const { return dose2_eligible_; }
  uint64_t dose2_administered() const { return dose2_administered_; }
  uint64_t catch_up_administered() const { return catch_up_administered_; }
  uint64_t infectious_now() const { return infectious_now_; }

  double cost(EconCategory c) const {
    return costs_[static_cast<std::size_t>(c)];
  }
  double total_cost() const {
    double s = 0.0;
    for (double c : costs_) s += c;
    return s;
  }
  // Utility-weighted discounted person-time adjustment accumulated by the
  // tagged (sick) states, relative to the healthy baseline.
  double qaly_adjustment() const { return qaly_adjust_; }

  // Healthy-baseline QALYs: utility_healthy integrated over each agent's
  // alive time inside [anchor, run_end], discounted. Add qaly_adjustment()
  // for the total.
  double baseline_qalys(double run_end) const {
    const Population& pop = sim_.population();
    double total = 0.0;
    for (AgentId a = 0; a < pop.size(); ++a) {
      const PersonAgent& p = pop.agent(a);
      double start = std::max(p.birth_time, anchor_);
      double stop = std::isnan(p.death_time) ? run_end
                                             : std::min(p.death_time, run_end);
      if (stop > start) {
        total += params_.utility_healthy * discounted_years(start, stop);
      }
    }
    return total;
  }

  // Occupancy of the natural-history chart over living agents.
  std::array<uint64_t, nh::kCount> occupancy() const {
    std::array<uint64_t, nh::kCount> out{};
    const Population& pop = sim_.population();
    for (AgentId a = 0; a < pop.size(); ++a) {
      if (!pop.agent(a).alive) continue;
      out[static_cast<std::size_t>(
          pop.agent(a).charts[kNhSlot].state)]++;
    }
    return out;
  }

  // Discounted duration of [a, b] relative to the reporting anchor.
  double discounted_years(double a, double b) const {
    if (!(b > a)) return 0.0;
    double r = params_.discount_rate;
    if (r <= 0.0) return b - a;
    return (std::exp(-r * (a - anchor_)) - std::exp(-r * (b - anchor_))) / r;
  }

  bool program_active(double t) const {
    return params_.program_enabled && t >= params_.program_start - 1e-12;
  }

  // Current cmi level and reactivation hazard; exposed for tests.
  double cmi_at(AgentId a, double t) const {
    const AgentDisease& d = disease_[a];
    double dt = t - d.last_boost;
    if (dt < 0.0) dt = 0.0;
    return d.cmi_at_boost *
           std::exp(-params_.cmi_waning_rate * d.coeff * dt);
  }
  double reactivation_hazard(AgentId a, double t) const {
    const AgentDisease& d = disease_[a];
    if (t - d.last_boost < params_.boosting_duration) return 0.0;
    return d.for_rate * std::exp(-params_.reactivation_k * cmi_at(a, t));
  }

 private:
  AgentDisease& d(AgentId a) { return disease_[a]; }

  void draw_disease_constants(AgentId a) {
    if (disease_.size() <= a) disease_.resize(a + 1);
    RngRegistry& rng = sim_.rng();
    AgentDisease& s = disease_[a];
    s.cmi_init = static_cast<float>(
        std::max(params_.cmi_floor,
                 rng.normal(Stream::kInitialization, params_.cmi_initial_mean,
                            params_.cmi_initial_sd)));
    s.coeff = static_cast<float>(rng.uniform(
        Stream::kInitialization, params_.waning_coeff_lo,
        params_.waning_coeff_hi));
    s.for_rate = static_cast<float>(
        rng.gamma(Stream::kInitialization, params_.reactivation_shape,
                  params_.reactivation_scale));
    s.cmi_at_boost = s.cmi_init;
    s.last_boost = -1e300;
    s.phn_pending = false;
    s.missed_first = false;
  }

  // Initial agents start mid-history depending on age.
  void attach_init(AgentId a) {
    draw_disease_constants(a);
    Population& pop = sim_.population();
    RngRegistry& rng = sim_.rng();
    const PersonAgent& p = pop.agent(a);
    double age = p.age(sim_.now());

    int start = nh::kSusceptible;
    if (age < params_.maternal_protection_duration) {
      start = nh::kMaternal;
    } else if (rng.bernoulli(Stream::kInitialization,
                             1.0 - std::exp(-params_.init_foi * age))) {
      start = nh::kRecoveredCP;
    } else if (rng.bernoulli(Stream::kInitialization,
                             params_.seed_prevalence)) {
      start = nh::kInfectiousCP;
    }
    sim_.add_chart(a, &nh_chart_, start);
    if (start == nh::kRecoveredCP) {
      // Unknown boost history; burn-in re-equilibrates the distribution.
      disease_[a].last_boost = -rng.uniform(Stream::kInitialization, 0.0,
                                            params_.init_boost_spread);
    }

    sim_.add_chart(a, p.sex == Sex::kFemale ? &aging_female_ : &aging_male_);

    int adherence_start = adh::kMissedSecond;
    if (age < params_.dose1_age) {
      adherence_start = adh::kTooYoung;
    } else if (age < params_.dose2_age) {
      adherence_start = adh::kMissedFirst;
    }
    sim_.add_chart(a, &adherence_, adherence_start);
  }

  // -- contact processes -----------------------------------------------------

  void emit_exposure(Simulation& s, AgentId a, double t, MessageKind kind,
                     double range, bool children_only) {
    Population& pop = s.population();
    const PersonAgent& me = pop.agent(a);
    pop.neighbors_within(me.pos, range, a, scratch_);
    if (children_only) {
      std::size_t keep = 0;
      for (AgentId b : scratch_) {
        double age = pop.agent(b).age(t);
        if (age >= params_.preferential_age_lo &&
            age <= params_.preferential_age_hi) {
          scratch_[keep++] = b;
        }
      }
      scratch_.resize(keep);
    }
    if (scratch_.empty()) return;  // contact event consumed, nobody in reach
    AgentId target = scratch_[s.rng().next_u64(Stream::kTransmission) %
                              scratch_.size()];
    s.send_message(a, target, kind);
  }

  void run_importation(Simulation& s, double t) {
    Population& pop = s.population();
    if (pop.alive_count() > 0) {
      for (int tries = 0; tries < 64; ++tries) {
        AgentId a = static_cast<AgentId>(
            s.rng().next_u64(Stream::kTransmission) % pop.size());
        if (pop.agent(a).alive) {
          s.send_message(kNoAgent, a, msg::kExposureCP);
          if (log_) {
            log_->record(LogEvent::kImportation, a, t, pop.agent(a).age(t));
          }
          break;
        }
      }
    }
    double dt =
        s.rng().exponential(Stream::kTransmission, params_.importation_rate);
    s.schedule_hook(t + dt, import_hook_);
  }

  // -- boosting / economics ---------------------------------------------------

  void boost(AgentId a, double t, bool log_it) {
    AgentDisease& s = d(a);
    s.cmi_at_boost = s.cmi_init;
    s.last_boost = t;
    if (log_it && log_) {
      log_->record(LogEvent::kBoost, a, t,
                   sim_.population().agent(a).age(t));
    }
  }

  void charge(EconCategory cat, double amount, double t) {
    if (amount <= 0.0) return;
    double r = params_.discount_rate;
    double f = r > 0.0 ? std::exp(-r * (t - anchor_)) : 1.0;
    costs_[static_cast<std::size_t>(cat)] += amount * f;
  }

  // Charges that occur with a per-episode probability. Skips the draw when
  // the probability is degenerate so default configs stay draw-free.
  void charge_maybe(EconCategory cat, double p, double amount, double t) {
    if (amount <= 0.0 || p <= 0.0) return;
    if (p < 1.0 && !sim_.rng().bernoulli(Stream::kTransmission, p)) return;
    charge(cat, amount, t);
  }

  void on_accrual(int tag, double t0, double t1) {
    double lo = std::max(t0, anchor_);
    double hi = std::max(t1, anchor_);
    if (!(hi > lo)) return;
    double utility = params_.utility_healthy;
    switch (tag) {
      case kTagChickenpox: utility = params_.utility_chickenpox; break;
      case kTagShingles: utility = params_.utility_shingles; break;
      case kTagPhn: utility = params_.utility_phn; break;
      default: return;
    }
    qaly_adjust_ +=
        (utility - params_.utility_healthy) * discounted_years(lo, hi);
  }

  // -- chart construction ------------------------------------------------------

  void build_natural_history() {
    ChartDefinition& c = nh_chart_;
    int maternal = c.add_state("maternalProtection");
    int susceptible = c.add_state("susceptible");
    int vax1 = c.add_state("vaccinatedOneDose");
    int vax2 = c.add_state("vaccinatedTwoDose");
    int breakthrough = c.add_state("breakthroughInfected");
    int infected_weak = c.add_state("infectedWeak");
    int infected_full = c.add_state("infectedFull");
    int infectious = c.add_state("infectiousCP");
    int symptomatic = c.add_state("symptomaticNonInfectious");
    int recovered = c.add_state("recoveredCP");
    int shingles = c.add_state("shinglesMild");
    int phn = c.add_state("shinglesPHN");
    int rec_shingles = c.add_state("recoveredShingles");
    c.set_initial(maternal);
    if (rec_shingles != nh::kRecoveredShingles ||
        susceptible != nh::kSusceptible) {
      throw std::logic_error("natural-history state order drifted");
    }

    const VaricellaParams& p = params_;

    // Maternal antibodies, measured from birth so initial infants get the
    // remaining duration only.
    c.add_transition(
        maternal, susceptible,
        TriggerSpec::make_timeout(
            [p](Simulation& s, AgentId a, double t) {
              return std::max(0.0, s.population().agent(a).birth_time +
                                       p.maternal_protection_duration - t);
            },
            Stream::kTransmission));

    // Exposure of susceptibles. One arrow per source kind, each with its
    // own acceptance probability.
    auto infect_guard = [](double prob) {
      return [prob](Simulation& s, AgentId, double) {
        return s.rng().bernoulli(Stream::kTransmission, prob);
      };
    };
    c.add_transition(susceptible, infected_full,
                     TriggerSpec::make_message(msg::kExposureCP),
                     infect_guard(p.p_infect_normal));
    c.add_transition(susceptible, infected_full,
                     TriggerSpec::make_message(msg::kExposureShingles),
                     infect_guard(p.p_infect_shingles));
    c.add_transition(susceptible, infected_full,
                     TriggerSpec::make_message(msg::kExposureBreakthrough),
                     infect_guard(p.p_infect_breakthrough));

    // Vaccination outcomes arrive as messages from the adherence chart.
    c.add_transition(susceptible, vax1,
                     TriggerSpec::make_message(msg::kDose1Success));
    c.add_transition(susceptible, vax2,
                     TriggerSpec::make_message(msg::kDose2Success));
    c.add_transition(vax1, vax2,
                     TriggerSpec::make_message(msg::kDose2Success));

    // One-dose protection: can wane back and can break through.
    c.add_transition(vax1, susceptible,
                     TriggerSpec::make_rate(p.waning_one_dose,
                                            Stream::kTransmission));
    for (MessageKind kind : {msg::kExposureCP, msg::kExposureShingles,
                             msg::kExposureBreakthrough}) {
      c.add_transition(vax1, infected_weak, TriggerSpec::make_message(kind),
                       infect_guard(p.p_infect_breakthrough));
    }
    c.add_transition(vax2, susceptible,
                     TriggerSpec::make_rate(p.waning_two_dose,
                                            Stream::kTransmission));

    // Incubation.
    c.set_entry(infected_full, [this](Simulation& s, AgentId a, double t) {
      if (log_) {
        log_->record(LogEvent::kInfection, a, t,
                     s.population().agent(a).age(t));
      }
    });
    c.set_entry(infected_weak, [this](Simulation& s, AgentId a, double t) {
      if (log_) {
        log_->record(LogEvent::kBreakthroughInfection, a, t,
                     s.population().agent(a).age(t));
      }
    });
    c.add_transition(infected_full, infectious,
                     TriggerSpec::make_timeout(p.latent_duration,
                                               Stream::kTransmission));
    c.add_transition(infected_weak, breakthrough,
                     TriggerSpec::make_timeout(p.latent_duration,
                                               Stream::kTransmission));

    // Infectious period: contact self-loops are internal transitions, so
    // the period timeout keeps running while exposures stream out.
    auto track_in = [this](Simulation&, AgentId, double) {
      ++infectious_now_;
    };
    auto track_out = [this](Simulation&, AgentId, double) {
      --infectious_now_;
    };
    c.set_entry(infectious, track_in);
    c.set_exit(infectious, track_out);
    c.set_entry(breakthrough, track_in);
    c.set_exit(breakthrough, track_out);
    c.set_accrual_tag(infectious, kTagChickenpox);
    c.set_accrual_tag(breakthrough, kTagChickenpox);
    c.set_accrual_tag(symptomatic, kTagChickenpox);

    auto add_contact_arrows = [&](int state, MessageKind kind) {
      c.add_transition(
          state, state,
          TriggerSpec::make_rate(p.contact_rate_normal, Stream::kTransmission),
          {},
          [this, kind](Simulation& s, AgentId a, double t) {
            emit_exposure(s, a, t, kind, params_.contact_range_normal, false);
          });
      // Child-to-child playground mixing; rate 0 outside the band disables
      // the arrow at arming time.
      c.add_transition(
          state, state,
          TriggerSpec::make_rate(
              [p](Simulation& s, AgentId a, double t) {
                double age = s.population().agent(a).age(t);
                return (age >= p.preferential_age_lo &&
                        age <= p.preferential_age_hi)
                           ? p.contact_rate_preferential
                           : 0.0;
              },
              Stream::kTransmission),
          {},
          [this, kind](Simulation& s, AgentId a, double t) {
            emit_exposure(s, a, t, kind, params_.contact_range_preferential,
                          true);
          });
    };
    add_contact_arrows(infectious, msg::kExposureCP);
    add_contact_arrows(breakthrough, msg::kExposureBreakthrough);

    c.add_transition(infectious, symptomatic,
                     TriggerSpec::make_timeout(p.infectious_duration,
                                               Stream::kTransmission));
    c.add_transition(breakthrough, symptomatic,
                     TriggerSpec::make_timeout(p.infectious_duration,
                                               Stream::kTransmission));

    // Symptomatic tail: episode costs land here, and the case-fatality draw
    // schedules a strictly-earlier fatality message so death always
    // preempts the recovery timeout.
    c.set_entry(symptomatic, [this](Simulation& s, AgentId a, double t) {
      charge_maybe(EconCategory::kGpVisit, params_.p_gp_chickenpox,
                   params_.cost_gp_visit, t);
      charge_maybe(EconCategory::kEdVisit, params_.p_ed_chickenpox,
                   params_.cost_ed_visit, t);
      charge(EconCategory::kHospitalDay,
             params_.hospital_days_chickenpox * params_.cost_hospital_day, t);
      charge(EconCategory::kPersonal, params_.cost_personal, t);
      charge(EconCategory::kProductivity, params_.cost_productivity, t);
      if (params_.case_fatality > 0.0 &&
          s.rng().bernoulli(Stream::kTransmission, params_.case_fatality)) {
        double delay = s.rng().uniform(Stream::kTransmission) * 0.95 *
                       params_.symptomatic_duration;
        s.send_message(a, a, msg::kFatality, delay);
      }
    });
    c.add_transition(symptomatic, recovered,
                     TriggerSpec::make_timeout(p.symptomatic_duration,
                                               Stream::kTransmission));

    // Recovery boosts cell-mediated immunity to the personal maximum.
    c.set_entry(recovered, [this](Simulation& s, AgentId a, double t) {
      boost(a, t, /*log_it=*/false);
      if (log_) {
        log_->record(LogEvent::kRecovery, a, t,
                     s.population().agent(a).age(t));
      }
    });

    // Re-exposure boosts. Internal transitions: the pending reactivation
    // arrow stays armed, and its guard reads the refreshed cmi when it
    // eventually fires, which is exactly the thinning contract.
    for (MessageKind kind : {msg::kExposureCP, msg::kExposureShingles,
                             msg::kExposureBreakthrough}) {
      c.add_transition(recovered, recovered, TriggerSpec::make_message(kind),
                       {}, [this](Simulation&, AgentId a, double t) {
                         boost(a, t, /*log_it=*/true);
                       });
    }
    if (p.exogenous_boost_rate > 0.0) {
      // Ambient re-exposure, thinned by chickenpox prevalence relative to
      // the reference level so it dies out with circulation.
      c.add_transition(
          recovered, recovered,
          TriggerSpec::make_rate(p.exogenous_boost_rate,
                                 Stream::kTransmission),
          [this](Simulation& s, AgentId, double) {
            double alive =
                static_cast<double>(s.population().alive_count());
            if (alive <= 0.0) return false;
            double prev = static_cast<double>(infectious_now_) / alive;
            double f =
                std::min(1.0, prev / params_.exogenous_reference_prev);
            return s.rng().uniform(Stream::kTransmission) < f;
          },
          [this](Simulation&, AgentId a, double t) {
            boost(a, t, /*log_it=*/true);
          });
    }

    // Reactivation: armed at the personal force of reactivation, accepted
    // at exp(-k * cmi) outside the boosting window.
    c.add_transition(
        recovered, shingles,
        TriggerSpec::make_rate(
            [this](Simulation&, AgentId a, double) {
              return static_cast<double>(d(a).for_rate);
            },
            Stream::kTransmission),
        [this](Simulation& s, AgentId a, double t) {
          if (t - d(a).last_boost < params_.boosting_duration) return false;
          return s.rng().uniform(Stream::kTransmission) <
                 std::exp(-params_.reactivation_k * cmi_at(a, t));
        });

    // Shingles episode. PHN fate is drawn at onset and read by the two
    // guarded exit timeouts.
    c.set_entry(shingles, [this](Simulation& s, AgentId a, double t) {
      d(a).phn_pending =
          s.rng().bernoulli(Stream::kTransmission, params_.p_phn);
      charge_maybe(EconCategory::kGpVisit, params_.p_gp_shingles,
                   params_.cost_gp_visit, t);
      charge_maybe(EconCategory::kEdVisit, params_.p_ed_shingles,
                   params_.cost_ed_visit, t);
      if (log_) {
        log_->record(LogEvent::kShinglesOnset, a, t,
                     s.population().agent(a).age(t));
      }
    });
    c.set_accrual_tag(shingles, kTagShingles);
    c.add_transition(
        shingles, shingles,
        TriggerSpec::make_rate(p.shingles_contact_rate, Stream::kTransmission),
        {},
        [this](Simulation& s, AgentId a, double t) {
          emit_exposure(s, a, t, msg::kExposureShingles,
                        params_.contact_range_normal *
                            params_.shingles_range_modifier,
                        false);
        });
    c.add_transition(shingles, rec_shingles,
                     TriggerSpec::make_timeout(p.shingles_duration,
                                               Stream::kTransmission),
                     [this](Simulation&, AgentId a, double) {
                       return !d(a).phn_pending;
                     });
    c.add_transition(shingles, phn,
                     TriggerSpec::make_timeout(p.shingles_duration,
                                               Stream::kTransmission),
                     [this](Simulation&, AgentId a, double) {
                       return d(a).phn_pending;
                     });

    c.set_entry(phn, [this](Simulation& s, AgentId a, double t) {
      charge(EconCategory::kHospitalDay,
             params_.hospital_days_phn * params_.cost_hospital_day, t);
      if (log_) {
        log_->record(LogEvent::kPhnOnset, a, t,
                     s.population().agent(a).age(t));
      }
    });
    c.set_accrual_tag(phn, kTagPhn);
    c.add_transition(phn, rec_shingles,
                     TriggerSpec::make_timeout(p.phn_duration,
                                               Stream::kTransmission));

    c.set_entry(rec_shingles, [this](Simulation& s, AgentId a, double t) {
      if (log_) {
        log_->record(LogEvent::kShinglesRecovery, a, t,
                     s.population().agent(a).age(t));
      }
    });
    c.add_transition(rec_shingles, shingles,
                     TriggerSpec::make_rate(p.relapse_rate,
                                            Stream::kTransmission),
                     {}, [this](Simulation& s, AgentId a, double t) {
                       if (log_) {
                         log_->record(LogEvent::kRelapse, a, t,
                                      s.population().agent(a).age(t));
                       }
                     });
  }

  void build_adherence() {
    ChartDefinition& c = adherence_;
    int too_young = c.add_state("tooYoung");
    int due1 = c.add_state("dueFirstDose");
    int got1 = c.add_state("receivedFirst");
    int miss1 = c.add_state("missedFirst");
    int due2 = c.add_state("dueSecondDose");
    int got2 = c.add_state("receivedSecond");
    int miss2 = c.add_state("missedSecond");
    int catch_up = c.add_state("catchUp");
    c.set_initial(too_young);
    if (catch_up != adh::kCatchUp || due2 != adh::kDueSecond) {
      throw std::logic_error("adherence state order drifted");
    }

    const VaricellaParams& p = params_;

    c.add_transition(too_young, due1,
                     TriggerSpec::make_timeout(
                         [p](Simulation& s, AgentId a, double t) {
                           return std::max(
                               0.0, s.population().agent(a).birth_time +
                                        p.dose1_age - t);
                         },
                         Stream::kVaccination));

    // The decision runs in the entry hook and reports back through a
    // self-message. While the program is inactive no draws happen at all,
    // which keeps paired arms on identical random streams until the
    // intervention actually diverges them.
    c.set_entry(due1, [this](Simulation& s, AgentId a, double t) {
      if (!program_active(t)) {
        s.send_message(a, a, msg::kAdhMiss1);
        return;
      }
      ++dose1_eligible_;
      DoseDecision dec =
          decide_dose(s.rng(), s.population().agent(a).attitude,
                      params_.dose1_prob, params_.primary_failure_1);
      if (dec.administered) {
        ++dose1_administered_;
        charge(EconCategory::kVaccineDose, params_.cost_per_dose, t);
        if (log_) {
          log_->record(LogEvent::kDose1, a, t,
                       s.population().agent(a).age(t));
        }
        if (dec.success) s.send_message(a, a, msg::kDose1Success);
        s.send_message(a, a, msg::kAdhGot1);
      } else {
        if (log_) {
          log_->record(LogEvent::kDoseRefused, a, t,
                       s.population().agent(a).age(t));
        }
        s.send_message(a, a, msg::kAdhMiss1);
      }
    });
    c.add_transition(due1, got1, TriggerSpec::make_message(msg::kAdhGot1));
    c.add_transition(due1, miss1, TriggerSpec::make_message(msg::kAdhMiss1));

    c.set_entry(miss1, [this](Simulation&, AgentId a, double) {
      d(a).missed_first = true;
    });

    auto due2_delay = TriggerSpec::make_timeout(
        [p](Simulation& s, AgentId a, double t) {
          return std::max(0.0, s.population().agent(a).birth_time +
                                   p.dose2_age - t);
        },
        Stream::kVaccination);
    c.add_transition(got1, due2, due2_delay);
    c.add_transition(miss1, due2, due2_delay);

    c.set_entry(due2, [this](Simulation& s, AgentId a, double t) {
      if (!program_active(t)) {
        s.send_message(a, a, msg::kAdhMiss2);
        return;
      }
      ++dose2_eligible_;
      DoseDecision dec =
          decide_dose(s.rng(), s.population().agent(a).attitude,
                      params_.dose2_prob, params_.primary_failure_2);
      if (dec.administered) {
        ++dose2_administered_;
        charge(EconCategory::kVaccineDose, params_.cost_per_dose, t);
        if (log_) {
          log_->record(LogEvent::kDose2, a, t,
                       s.population().agent(a).age(t));
        }
        if (dec.success) s.send_message(a, a, msg::kDose2Success);
        s.send_message(a, a, msg::kAdhGot2);
      } else {
        if (log_) {
          log_->record(LogEvent::kDoseRefused, a, t,
                       s.population().agent(a).age(t));
        }
        s.send_message(a, a, msg::kAdhMiss2);
      }
    });
    c.add_transition(due2, got2, TriggerSpec::make_message(msg::kAdhGot2));
    c.add_transition(due2, miss2, TriggerSpec::make_message(msg::kAdhMiss2));

    // Catch-up first dose, offered only when the second dose landed but the
    // first was missed.
    c.set_entry(got2, [this](Simulation& s, AgentId a, double t) {
      if (!d(a).missed_first || !params_.catch_up_enabled ||
          !program_active(t)) {
        return;
      }
      if (s.rng().bernoulli(Stream::kVaccination, params_.catch_up_prob)) {
        s.send_message(a, a, msg::kAdhCatchUp);
      }
    });
    c.add_transition(got2, catch_up,
                     TriggerSpec::make_message(msg::kAdhCatchUp));
    c.set_entry(catch_up, [this](Simulation& s, AgentId a, double t) {
      ++catch_up_administered_;
      charge(EconCategory::kVaccineDose, params_.cost_per_dose, t);
      if (log_) {
        log_->record(LogEvent::kDoseCatchUp, a, t,
                     s.population().agent(a).age(t));
      }
      if (!s.rng().bernoulli(Stream::kVaccination,
                             params_.primary_failure_1)) {
        s.send_message(a, a, msg::kDose1Success);
      }
    });
  }

  void build_aging() {
    // Dying during the infectious window must release the prevalence
    // counter, since kill() skips exit hooks.
    auto settle_death = [this](Simulation& s, AgentId a) {
      int state = s.population().agent(a).charts[kNhSlot].state;
      if (state == nh::kInfectiousCP || state == nh::kBreakthrough) {
        --infectious_now_;
      }
    };
    AgingChartOptions opts;
    opts.death_message = msg::kFatality;
    opts.on_death = [this, settle_death](Simulation& s, AgentId a, double t) {
      settle_death(s, a);
      if (log_) {
        log_->record(LogEvent::kDeath, a, t, s.population().agent(a).age(t));
      }
    };
    opts.on_infection_death = [this, settle_death](Simulation& s, AgentId a,
                                                   double t) {
      settle_death(s, a);
      if (log_) {
        log_->record(LogEvent::kDeathFromInfection, a, t,
                     s.population().agent(a).age(t));
      }
    };

    AgingChartOptions female = opts;
    female.childbirth = true;
    female.on_childbirth = [this](Simulation& s, AgentId mother, double) {
      AgentId child = process_birth(s, mother, *life_);
      attach_newborn(child);
    };
    aging_female_ = make_aging_chart(demo_, female);
    aging_male_ = make_aging_chart(demo_, opts);
  }

  Simulation& sim_;
  VaricellaParams params_;
  DemographicsConfig demo_;
  EventLog* log_ = nullptr;
  double anchor_ = 0.0;

  ChartDefinition nh_chart_;
  ChartDefinition adherence_;
  ChartDefinition aging_female_;
  ChartDefinition aging_male_;
  std::optional<LifeCourse> life_;
  uint16_t import_hook_ = 0;

  std::vector<AgentDisease> disease_;
  std::vector<AgentId> scratch_;

  uint64_t infectious_now_ = 0;
  uint64_t dose1_eligible_ = 0;
  uint64_t dose1_administered_ = 0;
  uint64_t dose2_eligible_ = 0;
  uint64_t dose2_administered_ = 0;
  uint64_t catch_up_administered_ = 0;

  std::array<double, kEconCategoryCount> costs_{};
  double qaly_adjust_ = 0.0;
};

}  // namespace epichart::varicella
