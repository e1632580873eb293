#include "holterisk/hrv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "holterisk/mathutil.hpp"

namespace holterisk {

HrvTimeDomain time_domain_hrv(const Eigen::VectorXd& nn_ms) {
  const Eigen::Index n = nn_ms.size();
  if (n < 2) throw DataError("insufficient intervals (need at least 2 NN intervals)");
  HrvTimeDomain out;
  out.n_intervals = n;
  const double mean = nn_ms.mean();
  out.sdnn_ms = std::sqrt((nn_ms.array() - mean).square().sum() / static_cast<double>(n - 1));
  const Eigen::VectorXd diff = nn_ms.tail(n - 1) - nn_ms.head(n - 1);
  out.rmssd_ms = std::sqrt(diff.squaredNorm() / static_cast<double>(n - 1));
  return out;
}

namespace {

// Band power of a windowed segment via direct DFT at the band's bins.
// Normalization: sum over all bins 0 < j < M/2 of one bin's power equals the
// variance of the windowed segment (one-sided periodogram).
struct BandPowers {
  double vlf = 0.0, lf = 0.0, hf = 0.0, total = 0.0;
};

BandPowers band_powers(const Eigen::VectorXd& seg, double fs) {
  const Eigen::Index m = seg.size();
  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(m - 1));
  const Eigen::VectorXd x = (seg.array() - seg.mean()) * w.array();
  const double wss = w.squaredNorm();

  BandPowers out;
  const double df = fs / static_cast<double>(m);
  const Eigen::Index j_max = static_cast<Eigen::Index>(std::floor(0.40 / df));
  for (Eigen::Index j = 1; j <= j_max && j < m / 2; ++j) {
    const double f = df * static_cast<double>(j);
    // Goertzel-style direct evaluation at one bin.
    const double wr = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
    double re = 0.0, im = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double ang = wr * static_cast<double>(i);
      re += x[i] * std::cos(ang);
      im -= x[i] * std::sin(ang);
    }
    const double p = 2.0 * (re * re + im * im) / (static_cast<double>(m) * wss);
    out.total += p;
    if (f >= 0.0033 && f < 0.04)
      out.vlf += p;
    else if (f >= 0.04 && f < 0.15)
      out.lf += p;
    else if (f >= 0.15 && f <= 0.40)
      out.hf += p;
  }
  return out;
}

}  // namespace

HrvFrequencyDomain frequency_domain_hrv(const Eigen::VectorXd& nn_ms,
                                        const Eigen::VectorXd& nn_end_times_s,
                                        const SpectralConfig& config) {
  if (nn_ms.size() != nn_end_times_s.size())
    throw DataError("NN values and times differ in length");
  if (nn_ms.size() < 2) throw DataError("insufficient intervals for spectral analysis");
  const double t0 = nn_end_times_s[0];
  const double t1 = nn_end_times_s[nn_end_times_s.size() - 1];
  if (t1 - t0 < config.window_s)
    throw DataError("segment too short for spectral analysis (need at least one window)");
  for (Eigen::Index i = 1; i < nn_end_times_s.size(); ++i)
    if (!(nn_end_times_s[i] > nn_end_times_s[i - 1]))
      throw DataError("NN times must be strictly increasing");

  // Linear-interpolation resampling of the tachogram.
  const double fs = config.resample_hz;
  const Eigen::Index m_total =
      static_cast<Eigen::Index>(std::floor((t1 - t0) * fs)) + 1;
  Eigen::VectorXd resampled(m_total);
  Eigen::Index knot = 0;
  for (Eigen::Index i = 0; i < m_total; ++i) {
    const double t = t0 + static_cast<double>(i) / fs;
    while (knot + 1 < nn_ms.size() && nn_end_times_s[knot + 1] < t) ++knot;
    if (knot + 1 >= nn_ms.size()) {
      resampled[i] = nn_ms[nn_ms.size() - 1];
      continue;
    }
    const double ta = nn_end_times_s[knot], tb = nn_end_times_s[knot + 1];
    const double alpha = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    resampled[i] = (1.0 - alpha) * nn_ms[knot] + alpha * nn_ms[knot + 1];
  }

  const Eigen::Index win = static_cast<Eigen::Index>(std::lround(config.window_s * fs));
  const Eigen::Index hop =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(
                                    config.window_s * fs * (1.0 - config.overlap))));
  HrvFrequencyDomain out;
  for (Eigen::Index start = 0; start + win <= m_total; start += hop) {
    const double w_start = t0 + static_cast<double>(start) / fs;
    const double w_end = w_start + static_cast<double>(win) / fs;
    // Coverage: how much of the window is backed by measured NN intervals.
    double covered_ms = 0.0;
    for (Eigen::Index i = 0; i < nn_ms.size(); ++i) {
      const double te = nn_end_times_s[i];
      const double tb = te - nn_ms[i] / 1000.0;
      const double lo = std::max(tb, w_start);
      const double hi = std::min(te, w_end);
      if (hi > lo) covered_ms += (hi - lo) * 1000.0;
    }
    if (covered_ms < config.min_coverage * (w_end - w_start) * 1000.0) {
      ++out.windows_excluded;
      continue;
    }
    const BandPowers p = band_powers(resampled.segment(start, win), fs);
    out.vlf_ms2 += p.vlf;
    out.lf_ms2 += p.lf;
    out.hf_ms2 += p.hf;
    out.total_ms2 += p.total;
    ++out.windows_used;
  }
  if (out.windows_used == 0) throw DataError("no usable spectral windows");
  const double nw = static_cast<double>(out.windows_used);
  out.vlf_ms2 /= nw;
  out.lf_ms2 /= nw;
  out.hf_ms2 /= nw;
  out.total_ms2 /= nw;
  out.lf_hf_ratio =
      out.hf_ms2 > 0.0 ? out.lf_ms2 / out.hf_ms2 : std::numeric_limits<double>::quiet_NaN();
  return out;
}

TurbulenceResult heart_rate_turbulence(const std::vector<VpcTachogram>& tachograms) {
  if (static_cast<long>(tachograms.size()) < kMinTachograms)
    throw DataError("insufficient tachograms (need at least 5)");
  TurbulenceResult out;
  out.tachogram_count = static_cast<long>(tachograms.size());

  double to_sum = 0.0;
  for (const VpcTachogram& t : tachograms) {
    if (t.post_rr.size() < 2) throw DataError("tachogram with fewer than 2 post intervals");
    const double pre = t.pre_rr[0] + t.pre_rr[1];
    const double post = t.post_rr[0] + t.post_rr[1];
    to_sum += 100.0 * (post - pre) / pre;
  }
  out.to_percent = to_sum / static_cast<double>(tachograms.size());

  // Average the post series across tachograms position by position.
  size_t max_len = 0;
  for (const VpcTachogram& t : tachograms) max_len = std::max(max_len, t.post_rr.size());
  std::vector<double> avg(max_len, 0.0);
  std::vector<long> counts(max_len, 0);
  for (const VpcTachogram& t : tachograms) {
    for (size_t i = 0; i < t.post_rr.size(); ++i) {
      avg[i] += t.post_rr[i];
      ++counts[i];
    }
  }
  for (size_t i = 0; i < max_len; ++i) avg[i] /= static_cast<double>(counts[i]);

  if (max_len < 5) throw DataError("averaged tachogram shorter than 5 intervals");
  double best = -std::numeric_limits<double>::infinity();
  for (size_t start = 0; start + 5 <= max_len; ++start) {
    Eigen::Map<const Eigen::VectorXd> window(avg.data() + start, 5);
    best = std::max(best, least_squares_slope(window));
  }
  out.ts_ms_per_beat = best;
  return out;
}

PrsaComponent prsa_capacity(const Eigen::VectorXd& nn_ms, PrsaDirection direction,
                            const PrsaConfig& config) {
  const Eigen::Index n = nn_ms.size();
  if (n < 200) throw DataError("insufficient intervals (need at least 200 NN intervals)");
  const int l = config.window_l;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2 * l);
  long anchors = 0;
  for (Eigen::Index i = l; i + l - 1 < n; ++i) {
    const double cur = nn_ms[i];
    const double prev = nn_ms[i - 1];
    const bool anchor = direction == PrsaDirection::deceleration ? cur > prev : cur < prev;
    if (!anchor) continue;
    // Plausibility: reject changes above the threshold fraction of the pair
    // mean (symmetric in the two intervals).
    if (std::abs(cur - prev) > config.max_change_frac * 0.5 * (cur + prev)) continue;
    sum += nn_ms.segment(i - l, 2 * l);
    ++anchors;
  }
  if (anchors < config.min_anchors)
    throw DataError("insufficient anchors (" + std::to_string(anchors) + " < " +
                    std::to_string(config.min_anchors) + ")");
  const Eigen::VectorXd x = sum / static_cast<double>(anchors);
  // x[l + k] is X(k) for k in [-L, L).
  PrsaComponent out;
  out.anchor_count = anchors;
  out.capacity_ms = (x[l] + x[l + 1] - x[l - 1] - x[l - 2]) / 4.0;
  return out;
}

PrsaResult prsa(const Eigen::VectorXd& nn_ms, const PrsaConfig& config) {
  const PrsaComponent dc = prsa_capacity(nn_ms, PrsaDirection::deceleration, config);
  const PrsaComponent ac = prsa_capacity(nn_ms, PrsaDirection::acceleration, config);
  PrsaResult out;
  out.dc_ms = dc.capacity_ms;
  out.ac_ms = ac.capacity_ms;
  out.anchor_count_dc = dc.anchor_count;
  out.anchor_count_ac = ac.anchor_count;
  return out;
}

}  // namespace holterisk
