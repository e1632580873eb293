#include "holterisk/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "holterisk/mathutil.hpp"

namespace holterisk {

namespace {

// Indices sorted by follow-up time ascending.
std::vector<int> order_by_time(const SurvivalData& data) {
  std::vector<int> idx(static_cast<size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (data.time[a] != data.time[b]) return data.time[a] < data.time[b];
    return a < b;
  });
  return idx;
}

int count_at_risk(const SurvivalData& data, double t) {
  int n = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (data.time[i] >= t) ++n;
  return n;
}

void fill_at_risk(const SurvivalData& data, const Eigen::VectorXd& grid, StepCurve* curve) {
  curve->grid_times = grid;
  curve->at_risk.resize(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    curve->at_risk[g] = count_at_risk(data, grid[g]);
}

}  // namespace

void SurvivalData::validate() const {
  if (time.size() == 0) throw DataError("empty survival data");
  if (status.size() != time.size())
    throw DataError("survival status length does not match time length");
  if (x.size() != 0 && x.rows() != time.size())
    throw DataError("covariate row count does not match time length");
  if (!covariate_names.empty() &&
      static_cast<Eigen::Index>(covariate_names.size()) != x.cols())
    throw DataError("covariate name count does not match covariate columns");
  for (Eigen::Index i = 0; i < time.size(); ++i) {
    if (!(time[i] > 0.0) || !std::isfinite(time[i]))
      throw DataError("nonpositive follow-up time at row " + std::to_string(i));
    if (status[i] < 0) throw DataError("negative status code at row " + std::to_string(i));
  }
  if (x.size() != 0 && !x.allFinite()) throw DataError("non-finite covariate value");
}

SurvivalData SurvivalData::subset(const std::vector<int>& rows) const {
  SurvivalData out;
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  out.time.resize(m);
  out.status.resize(m);
  out.x.resize(m, x.cols());
  out.covariate_names = covariate_names;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int r = rows[static_cast<size_t>(i)];
    out.time[i] = time[r];
    out.status[i] = status[r];
    if (x.cols() > 0) out.x.row(i) = x.row(r);
  }
  return out;
}

double StepCurve::value_at(double t) const {
  // Largest jump time <= t; right-continuous step function.
  const double* begin = times.data();
  const double* end = begin + times.size();
  const double* it = std::upper_bound(begin, end, t);
  if (it == begin) return initial_value;
  return values[static_cast<Eigen::Index>(it - begin) - 1];
}

StepCurve kaplan_meier(const SurvivalData& data, const Eigen::VectorXd& grid) {
  data.validate();
  const std::vector<int> ord = order_by_time(data);
  const Eigen::Index n = data.size();

  std::vector<double> jump_times;
  std::vector<double> jump_values;
  double surv = 1.0;
  Eigen::Index i = 0;
  while (i < n) {
    const double t = data.time[ord[static_cast<size_t>(i)]];
    const Eigen::Index n_risk = n - i;  // everyone with time >= t
    int d = 0;
    Eigen::Index j = i;
    while (j < n && data.time[ord[static_cast<size_t>(j)]] == t) {
      if (data.status[ord[static_cast<size_t>(j)]] != 0) ++d;
      ++j;
    }
    if (d > 0) {
      // (n - d) / n rather than 1 - d/n: the quotient form keeps textbook
      // fractions (2/3, ...) exactly representable products.
      surv *= static_cast<double>(n_risk - d) / static_cast<double>(n_risk);
      jump_times.push_back(t);
      jump_values.push_back(surv);
    }
    i = j;
  }

  StepCurve curve;
  curve.initial_value = 1.0;
  curve.times = Eigen::Map<const Eigen::VectorXd>(jump_times.data(),
                                                  static_cast<Eigen::Index>(jump_times.size()));
  curve.values = Eigen::Map<const Eigen::VectorXd>(jump_values.data(),
                                                   static_cast<Eigen::Index>(jump_values.size()));
  fill_at_risk(data, grid, &curve);
  return curve;
}

StepCurve cumulative_incidence(const SurvivalData& data, int cause,
                               const Eigen::VectorXd& grid) {
  data.validate();
  if (cause < 1) throw DataError("cause code must be >= 1");
  const std::vector<int> ord = order_by_time(data);
  const Eigen::Index n = data.size();

  std::vector<double> jump_times;
  std::vector<double> jump_values;
  double surv_minus = 1.0;  // all-cause KM just before the current time
  double incidence = 0.0;
  Eigen::Index i = 0;
  while (i < n) {
    const double t = data.time[ord[static_cast<size_t>(i)]];
    const Eigen::Index n_risk = n - i;
    int d_all = 0;
    int d_cause = 0;
    Eigen::Index j = i;
    while (j < n && data.time[ord[static_cast<size_t>(j)]] == t) {
      const int s = data.status[ord[static_cast<size_t>(j)]];
      if (s != 0) ++d_all;
      if (s == cause) ++d_cause;
      ++j;
    }
    if (d_cause > 0) {
      incidence += surv_minus * static_cast<double>(d_cause) / static_cast<double>(n_risk);
      jump_times.push_back(t);
      jump_values.push_back(incidence);
    }
    if (d_all > 0)
      surv_minus *= static_cast<double>(n_risk - d_all) / static_cast<double>(n_risk);
    i = j;
  }

  StepCurve curve;
  curve.initial_value = 0.0;
  curve.times = Eigen::Map<const Eigen::VectorXd>(jump_times.data(),
                                                  static_cast<Eigen::Index>(jump_times.size()));
  curve.values = Eigen::Map<const Eigen::VectorXd>(jump_values.data(),
                                                   static_cast<Eigen::Index>(jump_values.size()));
  fill_at_risk(data, grid, &curve);
  return curve;
}

namespace {

// One distinct event time with its event rows and a per-subject risk weight.
// Weights are 1 for plain Cox; Fine-Gray keeps competing-event subjects in
// the risk set with inverse-probability-of-censoring weights.
struct EventBlock {
  double time = 0.0;
  std::vector<int> events;  // rows with an event of interest at this time
};

using WeightFn = std::function<double(int row, const EventBlock& block)>;

// Log partial likelihood, gradient, and observed information with Efron tie
// handling and general risk weights (event rows always have weight 1).
void efron_eval(const SurvivalData& data, const std::vector<EventBlock>& blocks,
                const WeightFn& weight, const Eigen::VectorXd& beta, double* loglik,
                Eigen::VectorXd* grad, Eigen::MatrixXd* info) {
  const Eigen::Index n = data.size();
  const Eigen::Index p = data.x.cols();
  Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(data.x * beta) : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd rel = eta.array().exp();

  double ll = 0.0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd s1(p), sd1(p), avg(p);
  Eigen::MatrixXd s2(p, p), sd2(p, p);

  for (const EventBlock& block : blocks) {
    double s0 = 0.0;
    s1.setZero();
    s2.setZero();
    for (int row = 0; row < n; ++row) {
      const double w = weight(row, block);
      if (w == 0.0) continue;
      const double wr = w * rel[row];
      s0 += wr;
      if (p > 0) {
        s1.noalias() += wr * data.x.row(row).transpose();
        s2.noalias() += wr * data.x.row(row).transpose() * data.x.row(row);
      }
    }
    const int d = static_cast<int>(block.events.size());
    double sd0 = 0.0;
    sd1.setZero();
    sd2.setZero();
    for (int row : block.events) {
      sd0 += rel[row];
      ll += eta[row];
      if (p > 0) {
        sd1.noalias() += rel[row] * data.x.row(row).transpose();
        sd2.noalias() += rel[row] * data.x.row(row).transpose() * data.x.row(row);
        u.noalias() += data.x.row(row).transpose();
      }
    }
    for (int l = 0; l < d; ++l) {
      const double f = static_cast<double>(l) / static_cast<double>(d);
      const double denom = s0 - f * sd0;
      if (!(denom > 0.0)) {
        // Underflowed risk set: report -inf so the caller halves the step.
        *loglik = -std::numeric_limits<double>::infinity();
        *grad = u;
        *info = h;
        return;
      }
      ll -= std::log(denom);
      if (p > 0) {
        avg = (s1 - f * sd1) / denom;
        u.noalias() -= avg;
        h.noalias() += (s2 - f * sd2) / denom - avg * avg.transpose();
      }
    }
  }
  *loglik = ll;
  *grad = u;
  *info = h;
}

SurvivalFit run_newton(const SurvivalData& data, const std::vector<EventBlock>& blocks,
                       const WeightFn& weight, const FitOptions& options,
                       const Eigen::VectorXi& c_status) {
  const Eigen::Index p = data.x.cols();
  if (p == 0) throw DataError("model has no covariates");
  if (blocks.empty()) throw DataError("no events of the requested type");

  SurvivalFit fit;
  fit.covariate_names = data.covariate_names;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = 0.0;
  Eigen::VectorXd u(p);
  Eigen::MatrixXd h(p, p);
  efron_eval(data, blocks, weight, beta, &ll, &u, &h);
  fit.null_loglik = ll;

  // A log hazard ratio beyond 15 (HR > 3e6) only arises when a covariate
  // separates events from non-events; the monotone likelihood then drives the
  // score toward zero and would otherwise masquerade as convergence.
  constexpr double kSeparationBound = 15.0;
  // Already stationary at beta = 0 (e.g. a constant covariate).
  if (u.cwiseAbs().maxCoeff() < options.gradient_tol) fit.converged = true;
  for (int it = 1; !fit.converged && it <= options.max_iterations; ++it) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = ldlt.solve(u);
    if (ldlt.info() != Eigen::Success || !step.allFinite())
      throw ConvergenceError("singular information matrix (rank-deficient covariates?)");

    double scale = 1.0;
    Eigen::VectorXd cand;
    double ll_new = 0.0;
    Eigen::VectorXd u_new(p);
    Eigen::MatrixXd h_new(p, p);
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      cand = beta + scale * step;
      efron_eval(data, blocks, weight, cand, &ll_new, &u_new, &h_new);
      if (std::isfinite(ll_new) && ll_new >= ll - 1e-12 * (1.0 + std::abs(ll))) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) throw ConvergenceError("step halving failed in partial-likelihood fit");
    beta = cand;
    ll = ll_new;
    u = u_new;
    h = h_new;
    fit.iterations = it;
    if (beta.cwiseAbs().maxCoeff() > kSeparationBound)
      throw ConvergenceError(
          "monotone partial likelihood: a covariate separates events from non-events");
    if (u.cwiseAbs().maxCoeff() < options.gradient_tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged)
    throw ConvergenceError("partial-likelihood fit did not converge in " +
                           std::to_string(options.max_iterations) + " iterations");

  fit.beta = beta;
  fit.loglik = ll;
  Eigen::MatrixXd cov = h.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.se.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double v = cov(k, k);
    // A coefficient carrying no information (e.g. a constant covariate that
    // converged at 0) gets an infinite standard error rather than an error.
    fit.se[k] = (v > 0.0 && std::isfinite(v)) ? std::sqrt(v)
                                              : std::numeric_limits<double>::infinity();
  }
  fit.hr = beta.array().exp();
  fit.ci_lower = (beta - 1.96 * fit.se).array().exp();
  fit.ci_upper = (beta + 1.96 * fit.se).array().exp();

  if (options.compute_concordance) {
    SurvivalData scored = data;
    scored.status = c_status;
    fit.c_statistic = concordance(data.x * beta, scored);
  }
  return fit;
}

std::vector<EventBlock> collect_blocks(const SurvivalData& data,
                                       const std::function<bool(int)>& is_event) {
  const std::vector<int> ord = order_by_time(data);
  std::vector<EventBlock> blocks;
  for (int row : ord) {
    if (!is_event(row)) continue;
    if (blocks.empty() || blocks.back().time != data.time[row]) {
      blocks.push_back(EventBlock{data.time[row], {}});
    }
    blocks.back().events.push_back(row);
  }
  return blocks;
}

}  // namespace

SurvivalFit cox_fit(const SurvivalData& data, const FitOptions& options) {
  data.validate();
  auto blocks = collect_blocks(data, [&](int r) { return data.status[r] != 0; });
  WeightFn weight = [&](int row, const EventBlock& block) {
    return data.time[row] >= block.time ? 1.0 : 0.0;
  };
  Eigen::VectorXi c_status =
      (data.status.array() != 0).cast<int>();
  return run_newton(data, blocks, weight, options, c_status);
}

namespace {

// Kaplan-Meier estimate of the censoring distribution G(t), with events kept
// in its risk sets at tied times (events precede censorings).
struct CensorKm {
  std::vector<double> times;
  std::vector<double> values;

  double at_minus(double t) const {
    // Product over censoring times strictly before t.
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<size_t>(it - times.begin()) - 1];
  }
};

CensorKm censoring_km(const SurvivalData& data) {
  const std::vector<int> ord = order_by_time(data);
  const Eigen::Index n = data.size();
  CensorKm g;
  double surv = 1.0;
  Eigen::Index i = 0;
  while (i < n) {
    const double t = data.time[ord[static_cast<size_t>(i)]];
    const Eigen::Index n_risk = n - i;
    int d_cens = 0;
    Eigen::Index j = i;
    while (j < n && data.time[ord[static_cast<size_t>(j)]] == t) {
      if (data.status[ord[static_cast<size_t>(j)]] == 0) ++d_cens;
      ++j;
    }
    if (d_cens > 0) {
      surv *= static_cast<double>(n_risk - d_cens) / static_cast<double>(n_risk);
      g.times.push_back(t);
      g.values.push_back(surv);
    }
    i = j;
  }
  return g;
}

}  // namespace

SurvivalFit fine_gray_fit(const SurvivalData& data, int cause, const FitOptions& options) {
  data.validate();
  if (cause < 1) throw DataError("cause code must be >= 1");

  const CensorKm g = censoring_km(data);
  const Eigen::Index n = data.size();
  // G(T_j -) per subject, needed for the IPCW weight of competing events.
  Eigen::VectorXd g_minus_subject(n);
  for (Eigen::Index r = 0; r < n; ++r) g_minus_subject[r] = g.at_minus(data.time[r]);

  auto blocks = collect_blocks(data, [&](int r) { return data.status[r] == cause; });
  std::vector<double> g_minus_block(blocks.size());
  for (size_t b = 0; b < blocks.size(); ++b) g_minus_block[b] = g.at_minus(blocks[b].time);

  WeightFn weight = [&](int row, const EventBlock& block) -> double {
    if (data.time[row] >= block.time) return 1.0;
    const int s = data.status[row];
    if (s == 0 || s == cause) return 0.0;  // censored or already failed: leaves
    // Competing event before this time: stays with weight G(t-)/G(T_row-).
    const size_t b = static_cast<size_t>(&block - blocks.data());
    const double denom = g_minus_subject[row];
    if (!(denom > 0.0)) return 0.0;
    return g_minus_block[b] / denom;
  };

  Eigen::VectorXi c_status = (data.status.array() == cause).cast<int>();
  return run_newton(data, blocks, weight, options, c_status);
}

double concordance(const Eigen::VectorXd& scores, const SurvivalData& data) {
  data.validate();
  if (scores.size() != data.size())
    throw DataError("score length does not match survival data");
  if (!scores.allFinite()) throw DataError("non-finite score");

  double usable = 0.0;
  double credit = 0.0;
  const Eigen::Index n = data.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool ei = data.status[i] != 0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool ej = data.status[j] != 0;
      Eigen::Index first;  // the subject known to fail first
      Eigen::Index second;
      if (data.time[i] < data.time[j]) {
        if (!ei) continue;
        first = i;
        second = j;
      } else if (data.time[j] < data.time[i]) {
        if (!ej) continue;
        first = j;
        second = i;
      } else {
        // Tied times: usable only when exactly one is an event (the censored
        // subject is taken to survive past the event).
        if (ei == ej) continue;
        first = ei ? i : j;
        second = ei ? j : i;
      }
      usable += 1.0;
      if (scores[first] > scores[second])
        credit += 1.0;
      else if (scores[first] == scores[second])
        credit += 0.5;
    }
  }
  // No usable pair carries any ranking information; report pure chance.
  if (usable == 0.0) return 0.5;
  return credit / usable;
}

BiasCorrectedCurves bootstrap_bias_correct(const SurvivalData& data,
                                           const GroupingFitter& fitter, int n_groups,
                                           int n_boot, SplitRng rng,
                                           Eigen::VectorXd eval_times) {
  data.validate();
  if (n_groups < 1) throw DataError("need at least one group");
  if (n_boot < 1) throw DataError("need at least one bootstrap resample");

  if (eval_times.size() == 0) {
    std::vector<double> ts;
    for (Eigen::Index i = 0; i < data.size(); ++i)
      if (data.status[i] != 0) ts.push_back(data.time[i]);
    if (ts.empty()) throw DataError("no events to evaluate");
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    eval_times = Eigen::Map<const Eigen::VectorXd>(ts.data(),
                                                   static_cast<Eigen::Index>(ts.size()));
  }
  const Eigen::Index nt = eval_times.size();
  const int n = static_cast<int>(data.size());
  const Eigen::VectorXd no_grid;  // skip at-risk tables inside the loop

  // Per-group event probability 1 - S(t) at the evaluation times.
  auto group_curves = [&](const SurvivalData& d, const std::vector<int>& groups,
                          Eigen::MatrixXd* out) -> bool {
    out->resize(n_groups, nt);
    for (int gidx = 0; gidx < n_groups; ++gidx) {
      std::vector<int> rows;
      for (size_t r = 0; r < groups.size(); ++r)
        if (groups[r] == gidx) rows.push_back(static_cast<int>(r));
      if (rows.empty()) return false;
      StepCurve km = kaplan_meier(d.subset(rows), no_grid);
      for (Eigen::Index t = 0; t < nt; ++t)
        (*out)(gidx, t) = 1.0 - km.value_at(eval_times[t]);
    }
    return true;
  };

  BiasCorrectedCurves result;
  result.eval_times = eval_times;

  GroupAssigner apparent_rule = fitter(data);
  std::vector<int> apparent_groups = apparent_rule(data);
  if (static_cast<int>(apparent_groups.size()) != n)
    throw DataError("grouping rule returned wrong number of assignments");
  if (!group_curves(data, apparent_groups, &result.apparent))
    throw DataError("a group is empty in the original data");

  Eigen::MatrixXd optimism_sum = Eigen::MatrixXd::Zero(n_groups, nt);
  const long redraw_limit = 1000L * n_boot;
  long attempts = 0;
  for (int b = 0; b < n_boot; ++b) {
    Eigen::MatrixXd app_b, test_b;
    for (;;) {
      if (++attempts > redraw_limit)
        throw ConvergenceError("bootstrap exceeded the redraw limit (degenerate data?)");
      std::vector<int> rows(static_cast<size_t>(n));
      for (int r = 0; r < n; ++r)
        rows[static_cast<size_t>(r)] =
            static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      SurvivalData resample = data.subset(rows);
      GroupAssigner rule_b;
      try {
        rule_b = fitter(resample);
      } catch (const ConvergenceError&) {
        ++result.redraw_count;  // unfitable resample counts as degenerate
        continue;
      }
      std::vector<int> groups_b = rule_b(resample);
      std::vector<int> groups_orig = rule_b(data);
      if (!group_curves(resample, groups_b, &app_b) ||
          !group_curves(data, groups_orig, &test_b)) {
        ++result.redraw_count;
        continue;
      }
      break;
    }
    optimism_sum += app_b - test_b;
  }

  result.optimism = optimism_sum / static_cast<double>(n_boot);
  result.corrected = result.apparent - result.optimism;
  for (int gidx = 0; gidx < n_groups; ++gidx) {
    double running = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
      double v = std::clamp(result.corrected(gidx, t), 0.0, 1.0);
      running = std::max(running, v);  // event probability cannot decrease
      result.corrected(gidx, t) = running;
    }
  }
  return result;
}

void PowerSpec::validate() const {
  if (!(alpha_two_sided > 0.0 && alpha_two_sided < 1.0))
    throw DataError("alpha must be in (0,1)");
  if (!(power > 0.0 && power < 1.0)) throw DataError("power must be in (0,1)");
  if (!(hazard_ratio > 0.0) || hazard_ratio == 1.0)
    throw DataError("hazard ratio must be positive and different from 1");
  if (!(allocation_fraction > 0.0 && allocation_fraction < 1.0))
    throw DataError("allocation fraction must be in (0,1)");
}

long schoenfeld_events(const PowerSpec& spec) {
  spec.validate();
  const double za = normal_quantile(1.0 - spec.alpha_two_sided / 2.0);
  const double zb = normal_quantile(spec.power);
  const double p = spec.allocation_fraction;
  const double lh = std::log(spec.hazard_ratio);
  const double d = (za + zb) * (za + zb) / (p * (1.0 - p) * lh * lh);
  return std::lround(d);
}

double detectable_hazard_ratio(const PowerSpec& spec, long events) {
  PowerSpec checked = spec;
  checked.hazard_ratio = 2.0;  // placeholder; only alpha/power/allocation matter
  checked.validate();
  if (events < 1) throw DataError("event count must be positive");
  const double za = normal_quantile(1.0 - spec.alpha_two_sided / 2.0);
  const double zb = normal_quantile(spec.power);
  const double p = spec.allocation_fraction;
  return std::exp(-(za + zb) / std::sqrt(static_cast<double>(events) * p * (1.0 - p)));
}

double expected_events(double n_subjects, double annual_hazard, double accrual_years,
                       double total_years) {
  if (!(n_subjects >= 0.0)) throw DataError("subject count must be nonnegative");
  if (!(annual_hazard >= 0.0)) throw DataError("hazard must be nonnegative");
  if (!(accrual_years >= 0.0)) throw DataError("accrual period must be nonnegative");
  if (!(total_years >= accrual_years))
    throw DataError("total study time must cover the accrual period");
  if (annual_hazard == 0.0 || n_subjects == 0.0 || total_years == 0.0) return 0.0;
  const double lam = annual_hazard;
  if (accrual_years == 0.0) return n_subjects * (1.0 - std::exp(-lam * total_years));
  const double tail =
      (std::exp(-lam * (total_years - accrual_years)) - std::exp(-lam * total_years)) /
      (lam * accrual_years);
  return n_subjects * (1.0 - tail);
}

std::optional<double> patient_covariate(const Patient& p, std::string_view name) {
  if (name == "age_years") return p.age_years;
  if (name == "lvef_percent") return p.lvef_percent;
  if (name == "nyha_class") return static_cast<double>(static_cast<int>(p.nyha));
  if (name == "sex_male") return p.sex == Sex::male ? 1.0 : 0.0;
  if (name == "ischemic") return p.etiology == Etiology::ischemic ? 1.0 : 0.0;
  if (name == "af") return p.af ? 1.0 : 0.0;
  if (name == "diabetes") return p.diabetes ? 1.0 : 0.0;
  if (name == "group_icd") return p.group == StudyGroup::icd ? 1.0 : 0.0;
  if (name == "creatinine_mg_dl")
    return p.creatinine_mg_dl ? std::optional<double>(*p.creatinine_mg_dl) : std::nullopt;
  if (name == "bnp_pg_ml")
    return p.bnp_pg_ml ? std::optional<double>(*p.bnp_pg_ml) : std::nullopt;
  auto it = p.extras.find(std::string(name));
  if (it != p.extras.end()) return it->second;
  return std::nullopt;
}

SurvivalData cohort_to_survival(const CohortTable& cohort, Endpoint endpoint,
                                const std::vector<std::string>& covariates,
                                MissingPolicy policy, std::vector<std::string>* warnings) {
  if (cohort.patients.size() != cohort.followups.size())
    throw DataError("cohort follow-up rows do not match patient rows");
  std::vector<double> times;
  std::vector<int> statuses;
  std::vector<Eigen::VectorXd> rows;

  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    const Patient& p = cohort.patients[i];
    const FollowUp& fu = cohort.followups[i];

    Eigen::VectorXd row(static_cast<Eigen::Index>(covariates.size()));
    bool complete = true;
    for (size_t c = 0; c < covariates.size(); ++c) {
      std::optional<double> v = patient_covariate(p, covariates[c]);
      if (!v) {
        if (policy == MissingPolicy::reject)
          throw DataError("patient " + p.id + " is missing covariate '" + covariates[c] +
                          "'");
        if (warnings)
          warnings->push_back("patient " + p.id + " skipped: missing covariate '" +
                              covariates[c] + "'");
        complete = false;
        break;
      }
      row[static_cast<Eigen::Index>(c)] = *v;
    }
    if (!complete) continue;

    double t = 0.0;
    int status = 0;
    if (endpoint == Endpoint::mortality) {
      t = fu.time_years;
      switch (fu.terminal_event) {
        case TerminalEvent::alive_censored: status = 0; break;
        case TerminalEvent::scd: status = kCauseScd; break;
        case TerminalEvent::cardiac_death: status = kCauseCardiac; break;
        case TerminalEvent::noncardiac_death: status = kCauseNoncardiac; break;
      }
    } else {
      if (fu.first_appropriate_shock_years) {
        t = *fu.first_appropriate_shock_years;
        status = kCauseShock;
      } else {
        t = fu.time_years;
        status = fu.died() ? kCauseDeathBeforeShock : 0;
      }
    }
    times.push_back(t);
    statuses.push_back(status);
    rows.push_back(row);
  }

  if (times.empty()) throw DataError("no usable patients for the requested endpoint");
  SurvivalData out;
  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  out.time = Eigen::Map<const Eigen::VectorXd>(times.data(), n);
  out.status.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.status[i] = statuses[static_cast<size_t>(i)];
  out.x.resize(n, static_cast<Eigen::Index>(covariates.size()));
  for (Eigen::Index i = 0; i < n; ++i) out.x.row(i) = rows[static_cast<size_t>(i)];
  out.covariate_names = covariates;
  return out;
}

}  // namespace holterisk
