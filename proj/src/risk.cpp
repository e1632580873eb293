#include "holterisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "holterisk/mathutil.hpp"
#include "json.hpp"

namespace holterisk {

void ScoreWeights::validate() const {
  if (!std::isfinite(intercept)) throw DataError("non-finite intercept in score weights");
  for (const auto& [name, term] : terms)
    if (!std::isfinite(term.coefficient))
      throw DataError("non-finite coefficient for term '" + name + "'");
}

ScoreWeights default_mortality_weights() {
  ScoreWeights w;
  w.provenance =
      "illustrative mortality weights (clinical covariates); not fitted to any "
      "trial and not for clinical use";
  w.intercept = 0.0;
  w.terms["age_years"] = {0.04, "per year"};
  w.terms["nyha_class"] = {0.50, "per class"};
  w.terms["creatinine_mg_dl"] = {0.60, "per mg/dl"};
  w.terms["af"] = {0.55, "indicator"};
  w.terms["bnp_pg_ml"] = {0.002, "per pg/ml"};
  w.terms["lvef_percent"] = {-0.03, "per %"};
  return w;
}

ScoreWeights default_shock_weights() {
  ScoreWeights w;
  w.provenance =
      "illustrative shock weights (Holter markers); not fitted to any trial and "
      "not for clinical use";
  w.intercept = 0.0;
  w.terms["nsvt_count"] = {0.08, "per episode"};
  w.terms["pvc_count"] = {0.0002, "per complex"};
  w.terms["lvef_percent"] = {-0.04, "per %"};
  w.terms["twa_uv"] = {0.01, "per uV"};
  return w;
}

ScoreWeights load_weights_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("weights JSON: ") + e.what(),
                     static_cast<long>(e.byte));
  }
  if (!j.is_object()) throw ParseError("weights JSON: top level must be an object", 0);
  ScoreWeights w;
  for (const auto& [key, value] : j.items()) {
    if (key == "intercept") {
      if (!value.is_number()) throw ParseError("weights JSON: intercept must be a number", 0);
      w.intercept = value.get<double>();
    } else if (key == "provenance") {
      if (!value.is_string()) throw ParseError("weights JSON: provenance must be a string", 0);
      w.provenance = value.get<std::string>();
    } else if (key == "terms") {
      if (!value.is_object()) throw ParseError("weights JSON: terms must be an object", 0);
      for (const auto& [name, term] : value.items()) {
        ScoreWeights::Term t;
        if (term.is_number()) {
          t.coefficient = term.get<double>();
        } else if (term.is_object()) {
          for (const auto& [tk, tv] : term.items()) {
            if (tk == "coefficient") {
              if (!tv.is_number())
                throw ParseError("weights JSON: coefficient of '" + name +
                                     "' must be a number",
                                 0);
              t.coefficient = tv.get<double>();
            } else if (tk == "unit") {
              if (!tv.is_string())
                throw ParseError("weights JSON: unit of '" + name + "' must be a string", 0);
              t.unit = tv.get<std::string>();
            } else {
              throw ParseError("weights JSON: unknown key '" + tk + "' in term '" + name + "'",
                               0);
            }
          }
        } else {
          throw ParseError("weights JSON: term '" + name + "' must be a number or object", 0);
        }
        w.terms[name] = std::move(t);
      }
    } else {
      throw ParseError("weights JSON: unknown key '" + key + "'", 0);
    }
  }
  w.validate();
  return w;
}

std::string write_weights_json(const ScoreWeights& weights) {
  nlohmann::json j;
  j["provenance"] = weights.provenance;
  j["intercept"] = weights.intercept;
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [name, term] : weights.terms) {
    terms[name] = {{"coefficient", term.coefficient}, {"unit", term.unit}};
  }
  j["terms"] = std::move(terms);
  return j.dump(2) + "\n";
}

double compute_score(const Patient& patient, const MarkerVector* markers,
                     const ScoreWeights& weights, MissingPolicy policy,
                     std::vector<std::string>* warnings) {
  weights.validate();
  double score = weights.intercept;
  for (const auto& [name, term] : weights.terms) {
    std::optional<double> value = patient_covariate(patient, name);
    if (!value && markers != nullptr) value = markers->value_of(name);
    if (!value) {
      if (policy == MissingPolicy::reject)
        throw DataError("patient " + patient.id + ": missing covariate '" + name + "'");
      if (warnings)
        warnings->push_back("patient " + patient.id + ": term '" + name +
                            "' skipped (missing value)");
      continue;
    }
    if (!std::isfinite(*value))
      throw DataError("patient " + patient.id + ": non-finite covariate '" + name + "'");
    score += term.coefficient * *value;
  }
  return score;
}

const char* to_string(RiskCategory c) {
  switch (c) {
    case RiskCategory::low: return "low";
    case RiskCategory::intermediate: return "intermediate";
    case RiskCategory::high: return "high";
  }
  return "?";
}

RiskCategory Categorization::classify(double score) const {
  if (score <= cut_low_max) return RiskCategory::low;
  if (score <= cut_int_max) return RiskCategory::intermediate;
  return RiskCategory::high;
}

Categorization categorize(const Eigen::VectorXd& scores) {
  const Eigen::Index n = scores.size();
  if (n < 5) throw DataError("need at least 5 scores to form quintile categories");
  if (!scores.allFinite()) throw DataError("non-finite score");

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

  // Cut ranks for a two/two/one quintile split.
  const Eigen::Index k_low = static_cast<Eigen::Index>(std::llround(0.4 * static_cast<double>(n)));
  const Eigen::Index k_int = static_cast<Eigen::Index>(std::llround(0.8 * static_cast<double>(n)));

  Categorization cat;
  cat.cut_low_max = scores[order[static_cast<size_t>(k_low - 1)]];
  cat.cut_int_max = scores[order[static_cast<size_t>(k_int - 1)]];
  cat.categories.resize(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    cat.categories[static_cast<size_t>(i)] = cat.classify(scores[i]);

  const double lo = scores[order.front()];
  const double hi = scores[order.back()];
  if (lo == hi) {
    cat.degenerate = true;
    cat.warnings.push_back("degenerate score distribution: all scores equal; everyone low");
  } else if (cat.cut_int_max == hi) {
    cat.warnings.push_back("tied scores leave the high category empty");
  }
  return cat;
}

double annualized_rate(double event_count, double person_years) {
  if (!(person_years > 0.0)) throw DataError("person-years must be positive");
  if (event_count < 0.0) throw DataError("event count must be nonnegative");
  return 100.0 * event_count / person_years;
}

BenefitGrid benefit_grid(const std::vector<RiskProfile>& profiles,
                         const CohortTable& cohort) {
  if (profiles.size() != cohort.patients.size())
    throw DataError("profiles do not cover the cohort (" + std::to_string(profiles.size()) +
                    " profiles for " + std::to_string(cohort.patients.size()) + " patients)");
  BenefitGrid grid;
  std::vector<bool> seen(cohort.patients.size(), false);
  for (const RiskProfile& profile : profiles) {
    const int idx = cohort.index_of(profile.id);
    if (idx < 0) throw DataError("profile id '" + profile.id + "' not found in cohort");
    if (seen[static_cast<size_t>(idx)])
      throw DataError("duplicate profile id '" + profile.id + "'");
    seen[static_cast<size_t>(idx)] = true;

    const FollowUp& fu = cohort.followups[static_cast<size_t>(idx)];
    BenefitCell& cell = grid.cells[static_cast<size_t>(profile.mortality_cat)]
                                  [static_cast<size_t>(profile.shock_cat)];
    cell.count += 1;
    cell.person_years += fu.time_years;
    if (fu.died()) cell.deaths += 1;
    if (fu.first_appropriate_shock_years) {
      cell.shocks += 1;
      cell.shock_person_years += *fu.first_appropriate_shock_years;
    } else {
      cell.shock_person_years += fu.time_years;
    }
  }
  for (auto& row : grid.cells) {
    for (BenefitCell& cell : row) {
      if (cell.person_years > 0.0)
        cell.mortality_rate_pct_per_year =
            annualized_rate(static_cast<double>(cell.deaths), cell.person_years);
      if (cell.shock_person_years > 0.0)
        cell.shock_rate_pct_per_year =
            annualized_rate(static_cast<double>(cell.shocks), cell.shock_person_years);
      grid.total_count += cell.count;
      grid.total_person_years += cell.person_years;
    }
  }
  return grid;
}

namespace {

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string render_benefit_grid_csv(const BenefitGrid& grid) {
  std::string out =
      "mortality_cat,shock_cat,count,person_years,deaths,mortality_rate_pct_per_year,"
      "shocks,shock_person_years,shock_rate_pct_per_year\n";
  char buf[256];
  for (int m = 0; m < 3; ++m) {
    for (int s = 0; s < 3; ++s) {
      const BenefitCell& c = grid.cells[static_cast<size_t>(m)][static_cast<size_t>(s)];
      std::snprintf(buf, sizeof(buf), "%s,%s,%ld,%.17g,%ld,%.17g,%ld,%.17g,%.17g\n",
                    to_string(static_cast<RiskCategory>(m)),
                    to_string(static_cast<RiskCategory>(s)), c.count, c.person_years,
                    c.deaths, c.mortality_rate_pct_per_year, c.shocks, c.shock_person_years,
                    c.shock_rate_pct_per_year);
      out += buf;
    }
  }
  return out;
}

std::string render_benefit_grid_text(const BenefitGrid& grid) {
  // Rows: mortality risk (high on top); columns: shock risk (low to high).
  std::string out =
      "Patients by risk category: n (mortality %/yr | shock %/yr)\n"
      "                 shock low            shock intermediate   shock high\n";
  char buf[256];
  for (int m = 2; m >= 0; --m) {
    std::snprintf(buf, sizeof(buf), "mort %-12s", to_string(static_cast<RiskCategory>(m)));
    out += buf;
    for (int s = 0; s < 3; ++s) {
      const BenefitCell& c = grid.cells[static_cast<size_t>(m)][static_cast<size_t>(s)];
      std::string cell = std::to_string(c.count) + " (" +
                         format_rate(c.mortality_rate_pct_per_year) + " | " +
                         format_rate(c.shock_rate_pct_per_year) + ")";
      std::snprintf(buf, sizeof(buf), " %-20s", cell.c_str());
      out += buf;
    }
    out += '\n';
  }
  std::snprintf(buf, sizeof(buf), "total n = %ld, person-years = %.1f\n", grid.total_count,
                grid.total_person_years);
  out += buf;
  return out;
}

CorrelationResult score_correlation(const Eigen::VectorXd& mortality_scores,
                                    const Eigen::VectorXd& shock_scores) {
  if (mortality_scores.size() != shock_scores.size())
    throw DataError("score vectors differ in length");
  const Eigen::Index n = mortality_scores.size();
  if (n < 3) throw DataError("need at least 3 score pairs");
  CorrelationResult result;
  result.n = n;
  result.r = pearson_correlation(mortality_scores, shock_scores);
  const double r2 = result.r * result.r;
  if (r2 >= 1.0) {
    result.p = 0.0;
    return result;
  }
  const double df = static_cast<double>(n - 2);
  const double t = result.r * std::sqrt(df / (1.0 - r2));
  result.p = student_t_two_sided_p(t, df);
  return result;
}

StratifiedBenefit stratified_benefit(const CohortTable& cohort,
                                     const Eigen::VectorXd& proportional_scores) {
  const size_t n = cohort.patients.size();
  if (n == 0) throw DataError("empty cohort");
  if (static_cast<size_t>(proportional_scores.size()) != n)
    throw DataError("proportional scores do not match cohort size");
  if (!proportional_scores.allFinite()) throw DataError("non-finite proportional score");

  std::vector<double> sorted(proportional_scores.data(), proportional_scores.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 == 1u
                            ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  StratifiedBenefit result;
  result.median_score = median;

  auto build = [&](bool above) {
    SurvivalData d;
    std::vector<double> times;
    std::vector<int> statuses;
    std::vector<double> icd;
    for (size_t i = 0; i < n; ++i) {
      const bool is_above = proportional_scores[static_cast<Eigen::Index>(i)] > median;
      if (is_above != above) continue;
      times.push_back(cohort.followups[i].time_years);
      statuses.push_back(cohort.followups[i].died() ? 1 : 0);
      icd.push_back(cohort.patients[i].group == StudyGroup::icd ? 1.0 : 0.0);
    }
    const char* name = above ? "above-median" : "below-median";
    if (times.empty()) throw DataError(std::string(name) + " stratum is empty");
    const Eigen::Index m = static_cast<Eigen::Index>(times.size());
    d.time = Eigen::Map<const Eigen::VectorXd>(times.data(), m);
    d.status.resize(m);
    d.x.resize(m, 1);
    long events = 0;
    long n_icd = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      d.status[i] = statuses[static_cast<size_t>(i)];
      d.x(i, 0) = icd[static_cast<size_t>(i)];
      events += statuses[static_cast<size_t>(i)] != 0;
      n_icd += icd[static_cast<size_t>(i)] > 0.5;
    }
    if (n_icd == 0) throw DataError(std::string(name) + " stratum lacks ICD patients");
    if (n_icd == m) throw DataError(std::string(name) + " stratum lacks control patients");
    if (events == 0) throw DataError(std::string(name) + " stratum has no events");
    d.covariate_names = {"group_icd"};
    return d;
  };

  FitOptions opts;
  opts.compute_concordance = false;

  SurvivalData above = build(true);
  SurvivalData below = build(false);
  result.n_above = above.size();
  result.n_below = below.size();

  SurvivalFit fit_above = cox_fit(above, opts);
  SurvivalFit fit_below = cox_fit(below, opts);
  result.hr_above = fit_above.hr[0];
  result.ci_above_lower = fit_above.ci_lower[0];
  result.ci_above_upper = fit_above.ci_upper[0];
  result.hr_below = fit_below.hr[0];
  result.ci_below_lower = fit_below.ci_lower[0];
  result.ci_below_upper = fit_below.ci_upper[0];

  // Joint model with a group x stratum product term for the Wald test.
  SurvivalData joint;
  const Eigen::Index m = static_cast<Eigen::Index>(n);
  joint.time.resize(m);
  joint.status.resize(m);
  joint.x.resize(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    const size_t s = static_cast<size_t>(i);
    joint.time[i] = cohort.followups[s].time_years;
    joint.status[i] = cohort.followups[s].died() ? 1 : 0;
    const double g = cohort.patients[s].group == StudyGroup::icd ? 1.0 : 0.0;
    const double a = proportional_scores[i] > median ? 1.0 : 0.0;
    joint.x(i, 0) = g;
    joint.x(i, 1) = a;
    joint.x(i, 2) = g * a;
  }
  joint.covariate_names = {"group_icd", "above_median", "group_x_above"};
  SurvivalFit fit_joint = cox_fit(joint, opts);
  const double z = fit_joint.beta[2] / fit_joint.se[2];
  result.interaction_p = 2.0 * (1.0 - normal_cdf(std::abs(z)));
  return result;
}

}  // namespace holterisk
