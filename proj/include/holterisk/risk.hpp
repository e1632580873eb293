#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "holterisk/cohort.hpp"
#include "holterisk/markers.hpp"
#include "holterisk/survival.hpp"

namespace holterisk {

// Linear-predictor weights over named covariates and Holter markers.
struct ScoreWeights {
  struct Term {
    double coefficient = 0.0;
    std::string unit;
  };
  double intercept = 0.0;
  std::map<std::string, Term> terms;  // covariate/marker name -> term
  std::string provenance;

  void validate() const;  // all coefficients finite
};

// Illustrative defaults (clinical covariates for mortality, Holter markers
// for shock); not fitted to any trial and labeled as such in provenance.
ScoreWeights default_mortality_weights();
ScoreWeights default_shock_weights();

ScoreWeights load_weights_json(std::string_view text);
std::string write_weights_json(const ScoreWeights& weights);

// Linear predictor intercept + sum(coefficient * covariate). Covariates
// resolve against the patient schema first, then the marker battery.
// Missing terms: skip_with_warning drops the term and warns; reject throws.
// A present but non-finite value is always an error naming the field.
double compute_score(const Patient& patient, const MarkerVector* markers,
                     const ScoreWeights& weights,
                     MissingPolicy policy = MissingPolicy::skip_with_warning,
                     std::vector<std::string>* warnings = nullptr);

enum class RiskCategory { low = 0, intermediate = 1, high = 2 };
const char* to_string(RiskCategory c);

struct Categorization {
  std::vector<RiskCategory> categories;  // aligned with input scores
  double cut_low_max = 0.0;   // highest score still categorized low
  double cut_int_max = 0.0;   // highest score still categorized intermediate
  bool degenerate = false;
  std::vector<std::string> warnings;

  RiskCategory classify(double score) const;  // applies the stored cuts
};

// Quintile grouping: bottom two quintiles low, middle two intermediate, top
// one high (cut ranks round(0.4 n) and round(0.8 n); ties keep stable input
// order). All-equal scores degenerate to all-low with a warning.
Categorization categorize(const Eigen::VectorXd& scores);

// 100 * events / person_years.
double annualized_rate(double event_count, double person_years);

struct RiskProfile {
  std::string id;
  double mortality_score = 0.0;
  double shock_score = 0.0;
  RiskCategory mortality_cat = RiskCategory::low;
  RiskCategory shock_cat = RiskCategory::low;
};

struct BenefitCell {
  long count = 0;
  double person_years = 0.0;        // full follow-up (mortality denominator)
  double shock_person_years = 0.0;  // truncated at the first appropriate shock
  long deaths = 0;
  long shocks = 0;
  double mortality_rate_pct_per_year = 0.0;  // 0 when cell is empty
  double shock_rate_pct_per_year = 0.0;
};

struct BenefitGrid {
  // cells[mortality_cat][shock_cat]
  std::array<std::array<BenefitCell, 3>, 3> cells;
  long total_count = 0;
  double total_person_years = 0.0;
};

// Populates the 3x3 grid from per-patient profiles and follow-up, matching
// rows/followups by id against the cohort. Shock person-years stop at the
// first appropriate shock; mortality person-years run to end of follow-up.
BenefitGrid benefit_grid(const std::vector<RiskProfile>& profiles,
                         const CohortTable& cohort);

std::string render_benefit_grid_csv(const BenefitGrid& grid);
std::string render_benefit_grid_text(const BenefitGrid& grid);

struct CorrelationResult {
  double r = 0.0;
  double p = 1.0;
  long n = 0;
};

// Pearson correlation with a two-sided p-value from the t transform with
// n - 2 degrees of freedom.
CorrelationResult score_correlation(const Eigen::VectorXd& mortality_scores,
                                    const Eigen::VectorXd& shock_scores);

struct StratifiedBenefit {
  double hr_above = 1.0;  // ICD vs control, stratum above the median score
  double ci_above_lower = 0.0, ci_above_upper = 0.0;
  double hr_below = 1.0;
  double ci_below_lower = 0.0, ci_below_upper = 0.0;
  double interaction_p = 1.0;
  long n_above = 0, n_below = 0;
  double median_score = 0.0;
};

// Median split of proportional-benefit scores; Cox HR (ICD vs control) per
// stratum plus a Wald interaction test on the group x stratum product term
// in a joint model. Strata missing an arm or missing events are an error
// naming the stratum.
StratifiedBenefit stratified_benefit(const CohortTable& cohort,
                                     const Eigen::VectorXd& proportional_scores);

}  // namespace holterisk
