#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "holterisk/errors.hpp"

namespace holterisk {

// Standard normal quantile, Wichura's PPND16 rational approximation.
// Absolute error below 1e-12 over p in (0,1); deterministic across platforms,
// which keeps power/sample-size outputs bit-stable.
double normal_quantile(double p);

// Standard normal CDF via erfc.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Regularized incomplete beta function I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value for a t statistic with nu degrees of freedom.
double student_t_two_sided_p(double t, double nu);

// Pearson correlation of two equally sized vectors. Throws DataError on a
// zero-variance input. Accepts any dense Eigen expression.
template <typename DerivedA, typename DerivedB>
double pearson_correlation(const Eigen::DenseBase<DerivedA>& xs,
                           const Eigen::DenseBase<DerivedB>& ys) {
  const Eigen::Index n = xs.size();
  if (n != ys.size()) throw DataError("pearson_correlation: size mismatch");
  if (n < 3) throw DataError("pearson_correlation: need at least 3 pairs");
  const auto x = xs.derived().template cast<double>().eval();
  const auto y = ys.derived().template cast<double>().eval();
  const double mx = x.mean();
  const double my = y.mean();
  const auto dx = (x.array() - mx).eval();
  const auto dy = (y.array() - my).eval();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx <= 0.0 || syy <= 0.0) throw DataError("pearson_correlation: zero variance");
  return (dx * dy).sum() / std::sqrt(sxx * syy);
}

// Least-squares slope of y against x. Throws on degenerate x.
template <typename DerivedA, typename DerivedB>
double least_squares_slope(const Eigen::DenseBase<DerivedA>& xs,
                           const Eigen::DenseBase<DerivedB>& ys) {
  const Eigen::Index n = xs.size();
  if (n != ys.size() || n < 2) throw DataError("least_squares_slope: bad input sizes");
  const auto x = xs.derived().template cast<double>().eval();
  const auto y = ys.derived().template cast<double>().eval();
  const double mx = x.mean();
  const double my = y.mean();
  const auto dx = (x.array() - mx).eval();
  const double sxx = dx.square().sum();
  if (sxx <= 0.0) throw DataError("least_squares_slope: degenerate abscissa");
  return (dx * (y.array() - my)).sum() / sxx;
}

// Slope of y against the implicit abscissa 0, 1, ..., n-1.
template <typename Derived>
double least_squares_slope(const Eigen::DenseBase<Derived>& ys) {
  return least_squares_slope(
      Eigen::VectorXd::LinSpaced(ys.size(), 0.0, double(ys.size() - 1)), ys);
}

}  // namespace holterisk
