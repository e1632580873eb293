#include "holterisk/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "holterisk/errors.hpp"
#include "holterisk/mathutil.hpp"

namespace holterisk {

void SimConfig::validate() const {
  if (n_icd < 0 || n_control < 0) throw DataError("arm sizes must be nonnegative");
  if (n_icd + n_control == 0) throw DataError("empty cohort requested");
  if (!(annual_mortality_hazard >= 0.0) || !(annual_shock_hazard >= 0.0))
    throw DataError("hazards must be nonnegative");
  if (!(icd_mortality_hr > 0.0)) throw DataError("ICD mortality HR must be positive");
  if (!(accrual_years >= 0.0)) throw DataError("accrual period must be nonnegative");
  if (!(max_followup_years > 0.0)) throw DataError("follow-up must be positive");
  if (accrual_years > max_followup_years)
    throw DataError("accrual period cannot exceed maximum follow-up");
  double mix_sum = 0.0;
  for (double p : death_cause_mix) {
    if (!(p >= 0.0)) throw DataError("death-cause probabilities must be nonnegative");
    mix_sum += p;
  }
  if (std::abs(mix_sum - 1.0) > 1e-9) throw DataError("death-cause mix must sum to 1");
  if (!(crossover_fraction >= 0.0 && crossover_fraction <= 1.0))
    throw DataError("crossover fraction must be in [0,1]");
  if (!(af_prevalence >= 0.0 && af_prevalence <= 1.0))
    throw DataError("AF prevalence must be in [0,1]");
  if (!(score_correlation_rho > -1.0 && score_correlation_rho < 1.0))
    throw DataError("score correlation must be in (-1,1)");
  if (!std::isfinite(score_mortality_loghr) || !std::isfinite(score_shock_loghr))
    throw DataError("score log-HRs must be finite");
}

const char* to_string(Rhythm r) {
  switch (r) {
    case Rhythm::vt: return "vt";
    case Rhythm::vf: return "vf";
    case Rhythm::svt_af: return "svt_af";
  }
  return "?";
}

const char* to_string(Therapy t) {
  switch (t) {
    case Therapy::none: return "none";
    case Therapy::atp: return "atp";
    case Therapy::shock: return "shock";
  }
  return "?";
}

const char* to_string(Adjudication a) {
  switch (a) {
    case Adjudication::none: return "none";
    case Adjudication::appropriate: return "appropriate";
    case Adjudication::inappropriate: return "inappropriate";
  }
  return "?";
}

DeviceEpisode adjudicate_episode(DeviceEpisode episode, const ZoneConfig& zones) {
  if (!(episode.rate_bpm > 0.0)) throw DataError("episode rate must be positive");
  if (episode.rate_bpm < zones.vt_bpm) {
    episode.therapy = Therapy::none;
    episode.adjudication = Adjudication::none;
    return episode;
  }
  // VT zone and VF zone both deliver shock therapy in this model (no ATP).
  episode.therapy = Therapy::shock;
  episode.adjudication = (episode.rhythm == Rhythm::vt || episode.rhythm == Rhythm::vf)
                             ? Adjudication::appropriate
                             : Adjudication::inappropriate;
  return episode;
}

namespace {

std::string make_patient_id(long i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "P%06ld", i + 1);
  return buf;
}

}  // namespace

SimResult simulate_cohort(const SimConfig& config) {
  config.validate();
  SimResult out;
  SplitRng root(config.seed);
  const long n_total = config.n_icd + config.n_control;
  const double rho = config.score_correlation_rho;
  const double rho_tail = std::sqrt(1.0 - rho * rho);
  const ZoneConfig zones;

  for (long i = 0; i < n_total; ++i) {
    SplitRng rng = root.child(static_cast<std::uint64_t>(i));
    Patient p;
    FollowUp fu;
    p.id = make_patient_id(i);
    p.group = i < config.n_icd ? StudyGroup::icd : StudyGroup::control;

    // Baseline covariates; distributions keep every patient trial-eligible.
    p.age_years = std::clamp(rng.normal(65.0, 9.0), 30.0, 90.0);
    p.sex = rng.bernoulli(0.80) ? Sex::male : Sex::female;
    p.etiology = rng.bernoulli(0.70) ? Etiology::ischemic : Etiology::dilated;
    p.lvef_percent = std::clamp(rng.normal(27.0, 5.0), 10.0, 35.0);
    const double u_nyha = rng.uniform();
    p.nyha = u_nyha < 0.05 ? Nyha::I : (u_nyha < 0.65 ? Nyha::II : Nyha::III);
    if (p.nyha == Nyha::I) p.lvef_percent = std::min(p.lvef_percent, 30.0);
    p.af = rng.bernoulli(config.af_prevalence);
    p.diabetes = rng.bernoulli(0.30);
    p.creatinine_mg_dl = std::exp(rng.normal(std::log(1.1), 0.25));
    p.bnp_pg_ml = std::exp(rng.normal(std::log(250.0), 0.8));

    // Dual latent risk scores from a Gaussian copula.
    const double z_mort = rng.normal();
    const double z_shock = rho * z_mort + rho_tail * rng.normal();
    p.extras["mortality_score"] = z_mort;
    p.extras["shock_score"] = z_shock;

    // Administrative censoring: uniform entry, common calendar end.
    const double entry = config.accrual_years * rng.uniform();
    const double censor = config.max_followup_years - entry;

    // Death clock: exponential with an arm-specific hazard ratio.
    const double mort_mult = std::exp(config.score_mortality_loghr * z_mort);
    const double hazard = config.annual_mortality_hazard * mort_mult *
                          (p.group == StudyGroup::icd ? config.icd_mortality_hr : 1.0);
    const double death_u = rng.uniform();
    const double death_time =
        hazard > 0.0 ? -std::log1p(-death_u) / hazard : std::numeric_limits<double>::infinity();

    fu.time_years = std::min(death_time, censor);
    if (death_time <= censor) {
      const double u_cause = rng.uniform();
      if (u_cause < config.death_cause_mix[0])
        fu.terminal_event = TerminalEvent::scd;
      else if (u_cause < config.death_cause_mix[0] + config.death_cause_mix[1])
        fu.terminal_event = TerminalEvent::cardiac_death;
      else
        fu.terminal_event = TerminalEvent::noncardiac_death;
    } else {
      fu.terminal_event = TerminalEvent::alive_censored;
    }

    // Crossover: selected control patients acquire an ICD at a uniform time
    // within their observed follow-up (shock eligibility only).
    const bool crossover_drawn = rng.bernoulli(config.crossover_fraction);
    const double crossover_u = rng.uniform();
    double device_on_from = -1.0;  // < 0: never
    if (p.group == StudyGroup::icd) {
      device_on_from = 0.0;
    } else if (crossover_drawn) {
      fu.crossover_years = crossover_u * fu.time_years;
      device_on_from = *fu.crossover_years;
    }

    // First appropriate shock: exponential clock running while a device is on.
    const double shock_mult = std::exp(config.score_shock_loghr * z_shock);
    const double shock_hazard = config.annual_shock_hazard * shock_mult;
    const double shock_u = rng.uniform();
    const double shock_wait =
        shock_hazard > 0.0 ? -std::log1p(-shock_u) / shock_hazard
                           : std::numeric_limits<double>::infinity();
    const double u_rhythm = rng.uniform();
    const double u_rate = rng.uniform();
    if (device_on_from >= 0.0 && device_on_from + shock_wait < fu.time_years) {
      const double shock_time = device_on_from + shock_wait;
      fu.first_appropriate_shock_years = shock_time;
      DeviceEpisode ep;
      ep.patient_id = p.id;
      ep.time_years = shock_time;
      ep.rhythm = u_rhythm < 0.65 ? Rhythm::vt : Rhythm::vf;
      ep.rate_bpm = ep.rhythm == Rhythm::vt ? zones.vt_bpm + 39.0 * u_rate
                                            : zones.vf_bpm + 80.0 * u_rate;
      out.episodes.push_back(adjudicate_episode(ep, zones));
    }

    // Occasional SVT/AF episode; fast conduction may draw an inappropriate
    // shock, slower episodes are logged without therapy.
    const bool svt_drawn = rng.bernoulli(p.af ? 0.15 : 0.03);
    const double svt_time_u = rng.uniform();
    const double svt_rate_u = rng.uniform();
    if (svt_drawn && device_on_from >= 0.0 && device_on_from < fu.time_years) {
      DeviceEpisode ep;
      ep.patient_id = p.id;
      ep.time_years = device_on_from + svt_time_u * (fu.time_years - device_on_from);
      ep.rhythm = Rhythm::svt_af;
      ep.rate_bpm = 150.0 + 110.0 * svt_rate_u;
      ep = adjudicate_episode(ep, zones);
      if (ep.therapy == Therapy::shock &&
          (!fu.first_inappropriate_shock_years ||
           ep.time_years < *fu.first_inappropriate_shock_years))
        fu.first_inappropriate_shock_years = ep.time_years;
      out.episodes.push_back(std::move(ep));
    }

    // Sub-threshold slow VT, logged but untreated.
    const bool slow_vt_drawn = rng.bernoulli(0.10);
    const double slow_time_u = rng.uniform();
    const double slow_rate_u = rng.uniform();
    if (slow_vt_drawn && device_on_from >= 0.0 && device_on_from < fu.time_years) {
      DeviceEpisode ep;
      ep.patient_id = p.id;
      ep.time_years = device_on_from + slow_time_u * (fu.time_years - device_on_from);
      ep.rhythm = Rhythm::vt;
      ep.rate_bpm = 130.0 + (zones.vt_bpm - 131.0) * slow_rate_u;
      out.episodes.push_back(adjudicate_episode(ep, zones));
    }

    out.cohort.patients.push_back(std::move(p));
    out.cohort.followups.push_back(fu);
  }

  if (config.af_prevalence > kAfPrevalenceCap) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "configured atrial fibrillation prevalence %.1f%% exceeds the 15%% cap",
                  100.0 * config.af_prevalence);
    out.cohort.warnings.push_back(buf);
  }
  std::sort(out.episodes.begin(), out.episodes.end(),
            [](const DeviceEpisode& a, const DeviceEpisode& b) {
              if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
              return a.time_years < b.time_years;
            });
  return out;
}

std::string write_episode_csv(const std::vector<DeviceEpisode>& episodes) {
  std::string out = "patient_id,time_years,rhythm,rate_bpm,therapy,adjudication\n";
  char buf[160];
  for (const DeviceEpisode& ep : episodes) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%s,%.17g,%s,%s\n", ep.patient_id.c_str(),
                  ep.time_years, to_string(ep.rhythm), ep.rate_bpm, to_string(ep.therapy),
                  to_string(ep.adjudication));
    out += buf;
  }
  return out;
}

CalibrationReport calibration_report(const SimResult& sim, const SimConfig& config) {
  const CohortTable& cohort = sim.cohort;
  if (cohort.patients.empty()) throw DataError("empty cohort");
  CalibrationReport rep;
  rep.n_patients = static_cast<long>(cohort.patients.size());
  rep.target_mortality_pct = 100.0 * config.annual_mortality_hazard;
  rep.target_shock_pct = 100.0 * config.annual_shock_hazard;
  rep.target_rho = config.score_correlation_rho;
  rep.target_crossover = config.crossover_fraction;
  for (int c = 0; c < 3; ++c) rep.target_cause_mix[c] = config.death_cause_mix[c];

  long n_control = 0;
  long crossed = 0;
  std::vector<double> mort_scores, shock_scores;
  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    const Patient& p = cohort.patients[i];
    const FollowUp& fu = cohort.followups[i];
    rep.person_years += fu.time_years;
    if (fu.died()) {
      ++rep.deaths;
      switch (fu.terminal_event) {
        case TerminalEvent::scd: rep.cause_proportions[0] += 1.0; break;
        case TerminalEvent::cardiac_death: rep.cause_proportions[1] += 1.0; break;
        case TerminalEvent::noncardiac_death: rep.cause_proportions[2] += 1.0; break;
        case TerminalEvent::alive_censored: break;
      }
    }

    // Device-on person-years, truncated at the first appropriate shock.
    double on_from = -1.0;
    if (p.group == StudyGroup::icd)
      on_from = 0.0;
    else if (fu.crossover_years)
      on_from = *fu.crossover_years;
    if (on_from >= 0.0) {
      const double until = fu.first_appropriate_shock_years
                               ? *fu.first_appropriate_shock_years
                               : fu.time_years;
      rep.device_on_person_years += std::max(0.0, until - on_from);
      if (fu.first_appropriate_shock_years) ++rep.shocks;
    }

    if (p.group == StudyGroup::control) {
      ++n_control;
      if (fu.crossover_years) ++crossed;
    }
    auto mit = p.extras.find("mortality_score");
    auto sit = p.extras.find("shock_score");
    if (mit != p.extras.end() && sit != p.extras.end()) {
      mort_scores.push_back(mit->second);
      shock_scores.push_back(sit->second);
    }
  }

  if (rep.person_years > 0.0) {
    rep.mortality_rate_pct = 100.0 * static_cast<double>(rep.deaths) / rep.person_years;
    rep.mortality_rate_se_pct =
        100.0 * std::sqrt(static_cast<double>(rep.deaths)) / rep.person_years;
  }
  if (rep.device_on_person_years > 0.0) {
    rep.shock_rate_pct =
        100.0 * static_cast<double>(rep.shocks) / rep.device_on_person_years;
    rep.shock_rate_se_pct =
        100.0 * std::sqrt(static_cast<double>(rep.shocks)) / rep.device_on_person_years;
  }
  if (rep.deaths > 0)
    for (double& c : rep.cause_proportions) c /= static_cast<double>(rep.deaths);

  if (mort_scores.size() >= 4) {
    Eigen::Map<const Eigen::VectorXd> mv(mort_scores.data(),
                                         static_cast<Eigen::Index>(mort_scores.size()));
    Eigen::Map<const Eigen::VectorXd> sv(shock_scores.data(),
                                         static_cast<Eigen::Index>(shock_scores.size()));
    rep.score_r = pearson_correlation(mv, sv);
    // Delta-method SE back-transformed from the Fisher z scale.
    const double z_se = 1.0 / std::sqrt(static_cast<double>(mort_scores.size()) - 3.0);
    rep.score_r_se = (1.0 - rep.score_r * rep.score_r) * z_se;
  }
  if (n_control > 0) {
    rep.crossover_fraction = static_cast<double>(crossed) / static_cast<double>(n_control);
    rep.crossover_se = std::sqrt(rep.crossover_fraction * (1.0 - rep.crossover_fraction) /
                                 static_cast<double>(n_control));
  }
  return rep;
}

std::string CalibrationReport::render_text() const {
  char buf[512];
  std::string out = "Simulation calibration\n";
  std::snprintf(buf, sizeof(buf), "  patients: %ld, person-years: %.1f\n", n_patients,
                person_years);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "  annualized mortality: %.2f %%/yr (SE %.2f), target %.2f\n",
                mortality_rate_pct, mortality_rate_se_pct, target_mortality_pct);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "  annualized first appropriate shock: %.2f %%/yr (SE %.2f), target %.2f\n",
                shock_rate_pct, shock_rate_se_pct, target_shock_pct);
  out += buf;
  std::snprintf(buf, sizeof(buf), "  score correlation r: %.3f (SE %.3f), target %.3f\n",
                score_r, score_r_se, target_rho);
  out += buf;
  std::snprintf(buf, sizeof(buf), "  crossover fraction: %.3f (SE %.3f), target %.3f\n",
                crossover_fraction, crossover_se, target_crossover);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "  death causes (scd/cardiac/noncardiac): %.2f/%.2f/%.2f, target "
                "%.2f/%.2f/%.2f over %ld deaths\n",
                cause_proportions[0], cause_proportions[1], cause_proportions[2],
                target_cause_mix[0], target_cause_mix[1], target_cause_mix[2], deaths);
  out += buf;
  return out;
}

}  // namespace holterisk
