#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "holterisk/cohort.hpp"
#include "holterisk/errors.hpp"
#include "holterisk/rng.hpp"

namespace holterisk {

// Right-censored survival observations, optionally with competing causes.
// status: 0 = censored, k >= 1 = event of cause k.
struct SurvivalData {
  Eigen::VectorXd time;
  Eigen::VectorXi status;
  Eigen::MatrixXd x;  // n rows, one column per covariate (may have 0 columns)
  std::vector<std::string> covariate_names;

  Eigen::Index size() const { return time.size(); }
  void validate() const;
  SurvivalData subset(const std::vector<int>& rows) const;
};

// Step function estimate with an at-risk table on a requested time grid.
struct StepCurve {
  double initial_value = 1.0;  // value before the first jump
  Eigen::VectorXd times;       // strictly increasing jump times
  Eigen::VectorXd values;      // value at and after times[i]
  Eigen::VectorXd grid_times;
  Eigen::VectorXi at_risk;     // subjects at risk at each grid time

  double value_at(double t) const;
};

inline const Eigen::VectorXd kDefaultAtRiskGrid = Eigen::VectorXd::LinSpaced(7, 0.0, 6.0);

// Product-limit survival estimator; any nonzero status counts as an event.
// Ties are resolved events-before-censorings.
StepCurve kaplan_meier(const SurvivalData& data,
                       const Eigen::VectorXd& grid = kDefaultAtRiskGrid);

// Aalen-Johansen cumulative incidence for one cause under competing risks.
// At every event time, overall KM survival plus the incidences of all causes
// sums to one (up to roundoff).
StepCurve cumulative_incidence(const SurvivalData& data, int cause,
                               const Eigen::VectorXd& grid = kDefaultAtRiskGrid);

struct SurvivalFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd hr;        // exp(beta)
  Eigen::VectorXd ci_lower;  // exp(beta - 1.96 se)
  Eigen::VectorXd ci_upper;  // exp(beta + 1.96 se)
  double loglik = 0.0;
  double null_loglik = 0.0;
  double c_statistic = 0.5;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> covariate_names;
};

struct FitOptions {
  double gradient_tol = 1e-8;
  int max_iterations = 50;
  bool compute_concordance = true;
};

// Cox proportional hazards, Efron tie handling, Newton-Raphson on the log
// partial likelihood. Any nonzero status is an event. Throws
// ConvergenceError on non-convergence or monotone likelihood.
SurvivalFit cox_fit(const SurvivalData& data, const FitOptions& options = {});

// Fine & Gray subdistribution hazards for one cause. Subjects with competing
// events stay in the risk set with Kaplan-Meier censoring (IPCW) weights.
// With no competing events present the estimate coincides with cox_fit.
SurvivalFit fine_gray_fit(const SurvivalData& data, int cause,
                          const FitOptions& options = {});

// Harrell's C. Orientation: a higher score predicts an earlier event; equal
// scores in a usable pair count 1/2. Pairs tied on time with two events are
// not usable; an event tied with a censoring is (the censored subject is
// taken to outlive the event).
double concordance(const Eigen::VectorXd& scores, const SurvivalData& data);

// A fitted grouping rule: assigns each subject of a dataset to a group.
using GroupAssigner = std::function<std::vector<int>(const SurvivalData&)>;
// Fits a grouping rule on a (re)sample, returning the assigner.
using GroupingFitter = std::function<GroupAssigner(const SurvivalData&)>;

struct BiasCorrectedCurves {
  Eigen::VectorXd eval_times;
  // One row per group: event probability 1 - S(t) on the evaluation grid.
  Eigen::MatrixXd apparent;
  Eigen::MatrixXd corrected;
  Eigen::MatrixXd optimism;
  int redraw_count = 0;
};

// Harrell-style optimism correction of per-group event-probability curves.
// optimism(g,t) = mean over B resamples of [apparent separation on the
// resample - resample-fitted rule evaluated on the original data]; the
// corrected curve subtracts it from the apparent curve (then clamped to [0,1]
// and re-monotonized). Deterministic for a fixed rng seed. Resamples leaving
// a group empty are redrawn and counted.
BiasCorrectedCurves bootstrap_bias_correct(const SurvivalData& data,
                                           const GroupingFitter& fitter, int n_groups,
                                           int n_boot, SplitRng rng,
                                           Eigen::VectorXd eval_times = {});

struct PowerSpec {
  double alpha_two_sided = 0.05;
  double power = 0.80;
  double hazard_ratio = 2.0;
  double allocation_fraction = 0.5;  // fraction of subjects in one group

  void validate() const;
};

// Schoenfeld event count for a two-group log-rank/Cox comparison, rounded to
// the nearest integer: (z_{1-a/2} + z_pow)^2 / (p(1-p) ln^2 HR).
long schoenfeld_events(const PowerSpec& spec);

// Inverse of the Schoenfeld formula: the protective hazard ratio (< 1)
// detectable with the given number of events. hazard_ratio in the spec is
// ignored.
double detectable_hazard_ratio(const PowerSpec& spec, long events);

// Expected events under uniform accrual over accrual_years, exponential event
// times with the given annual hazard, and administrative censoring at
// total_years of calendar time.
double expected_events(double n_subjects, double annual_hazard, double accrual_years,
                       double total_years);

// Endpoint extraction from a cohort. Mortality cause codes: 1 = SCD,
// 2 = cardiac, 3 = non-cardiac. Shock endpoint: 1 = first appropriate shock,
// 2 = death before any shock.
enum class Endpoint { mortality, first_appropriate_shock };

inline constexpr int kCauseScd = 1;
inline constexpr int kCauseCardiac = 2;
inline constexpr int kCauseNoncardiac = 3;
inline constexpr int kCauseShock = 1;
inline constexpr int kCauseDeathBeforeShock = 2;

// Looks up a numeric covariate on a patient by name (schema fields, derived
// indicators such as sex_male/group_icd/nyha_class, then extras).
std::optional<double> patient_covariate(const Patient& p, std::string_view name);

// Builds a SurvivalData for the endpoint with the named covariates.
// Patients missing a covariate are dropped (complete-case) with a warning
// when warnings is non-null; with MissingPolicy::reject they are an error.
enum class MissingPolicy { skip_with_warning, reject };
SurvivalData cohort_to_survival(const CohortTable& cohort, Endpoint endpoint,
                                const std::vector<std::string>& covariates,
                                MissingPolicy policy = MissingPolicy::skip_with_warning,
                                std::vector<std::string>* warnings = nullptr);

}  // namespace holterisk
