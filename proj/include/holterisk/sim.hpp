#pragma once

#include <string>
#include <vector>

#include "holterisk/cohort.hpp"
#include "holterisk/rng.hpp"

namespace holterisk {

// Synthetic two-arm cohort generator. Follow-up is administrative: patients
// enter uniformly over accrual_years and are censored at max_followup_years
// of calendar time (so per-patient follow-up spans [max-accrual, max] years).
struct SimConfig {
  long n_icd = 1500;
  long n_control = 750;
  double annual_mortality_hazard = 0.045;  // control-arm baseline, per year
  double annual_shock_hazard = 0.045;      // first appropriate shock, per year
  double icd_mortality_hr = 0.73;
  double accrual_years = 2.0;
  double max_followup_years = 6.0;
  // Probabilities over (SCD, cardiac non-sudden, non-cardiac) causes.
  double death_cause_mix[3] = {0.35, 0.35, 0.30};
  double crossover_fraction = 0.04;  // control patients acquiring an ICD
  double af_prevalence = 0.12;
  double score_correlation_rho = 0.56;  // Gaussian copula for the dual scores
  // Optional prognostic effect of the latent scores on the event clocks
  // (log-HR per score SD); 0 keeps the marginal rates exactly at the targets.
  double score_mortality_loghr = 0.0;
  double score_shock_loghr = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class Rhythm { vt, vf, svt_af };
enum class Therapy { none, atp, shock };
enum class Adjudication { none, appropriate, inappropriate };

const char* to_string(Rhythm r);
const char* to_string(Therapy t);
const char* to_string(Adjudication a);

struct DeviceEpisode {
  std::string patient_id;
  double time_years = 0.0;
  Rhythm rhythm = Rhythm::vt;
  double rate_bpm = 0.0;
  Therapy therapy = Therapy::none;
  Adjudication adjudication = Adjudication::none;
};

// Device programming zones (detection rate cutoffs).
struct ZoneConfig {
  double vt_bpm = 200.0;
  double vf_bpm = 240.0;
};

// Applies zone rules: below the VT cutoff no therapy and no adjudication;
// in the VT zone and above, therapy is delivered (modeled as shock) and the
// episode is adjudicated appropriate for VT/VF, inappropriate for SVT/AF.
DeviceEpisode adjudicate_episode(DeviceEpisode episode, const ZoneConfig& zones = {});

struct SimResult {
  CohortTable cohort;  // patients + followups; latent scores in extras
  std::vector<DeviceEpisode> episodes;
};

// Deterministic for a fixed seed (per-patient child RNG streams).
// Latent per-patient scores are stored in Patient::extras under
// "mortality_score" and "shock_score". Crossover changes shock eligibility
// only; the mortality clock keeps the control hazard (documented choice).
SimResult simulate_cohort(const SimConfig& config);

std::string write_episode_csv(const std::vector<DeviceEpisode>& episodes);

struct CalibrationReport {
  long n_patients = 0;
  long deaths = 0;
  double person_years = 0.0;
  double mortality_rate_pct = 0.0;  // 100 * deaths / person-years
  double mortality_rate_se_pct = 0.0;
  double target_mortality_pct = 0.0;

  long shocks = 0;
  double device_on_person_years = 0.0;  // truncated at the first shock
  double shock_rate_pct = 0.0;
  double shock_rate_se_pct = 0.0;
  double target_shock_pct = 0.0;

  double score_r = 0.0;
  double score_r_se = 0.0;  // via the Fisher transform
  double target_rho = 0.0;

  double crossover_fraction = 0.0;  // of control patients
  double crossover_se = 0.0;
  double target_crossover = 0.0;

  double cause_proportions[3] = {0.0, 0.0, 0.0};
  double target_cause_mix[3] = {0.0, 0.0, 0.0};

  std::string render_text() const;
};

CalibrationReport calibration_report(const SimResult& sim, const SimConfig& config);

}  // namespace holterisk
