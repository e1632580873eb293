#include "holterisk/repol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "holterisk/beats.hpp"

namespace holterisk {

void BeatWindow::validate_fiducials() const {
  if (!(q_on >= 0 && q_on < r_peak && r_peak < j_point && j_point < t_peak &&
        t_peak < t_end && t_end < samples_uv.cols()))
    throw DataError("beat fiducials violate q_on < r_peak < j_point < t_peak < t_end");
}

namespace {

long reference_lead(const BeatWindow& beat) {
  for (size_t i = 0; i < beat.lead_names.size(); ++i)
    if (beat.lead_names[i] == "II") return static_cast<long>(i);
  long best = 0;
  double best_amp = -1.0;
  for (long i = 0; i < beat.samples_uv.rows(); ++i) {
    const double amp =
        beat.samples_uv.row(i).maxCoeff() - beat.samples_uv.row(i).minCoeff();
    if (amp > best_amp) {
      best_amp = amp;
      best = i;
    }
  }
  return best;
}

}  // namespace

bool locate_fiducials(BeatWindow* beat, long r_offset) {
  const Eigen::Index n = beat->samples_uv.cols();
  if (n < 8 || r_offset < 2 || r_offset >= n - 2) return false;
  const double rate = beat->rate_hz;
  if (!(rate > 0.0)) return false;
  const long lead = reference_lead(*beat);
  const Eigen::VectorXd x = beat->samples_uv.row(lead);

  auto ms = [&](double m) { return std::max<long>(1, std::lround(m * 1e-3 * rate)); };

  // Central-difference slope; the QRS carries the steepest slopes.
  Eigen::VectorXd slope = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 1; k + 1 < n; ++k) slope[k] = 0.5 * (x[k + 1] - x[k - 1]);
  const long qrs_lo = std::max<long>(1, r_offset - ms(100));
  const long qrs_hi = std::min<long>(n - 2, r_offset + ms(100));
  double max_slope = 0.0;
  for (long k = qrs_lo; k <= qrs_hi; ++k) max_slope = std::max(max_slope, std::abs(slope[k]));
  if (max_slope <= 0.0) return false;
  const double quiet = 0.02 * max_slope;

  // QRS onset: walk left from R until the slope stays quiet for 10 ms.
  const long quiet_run_q = ms(10);
  long q_on = -1;
  long run = 0;
  for (long k = r_offset - ms(10); k >= 1; --k) {
    if (std::abs(slope[k]) < quiet) {
      if (++run >= quiet_run_q) {
        q_on = k + quiet_run_q - 1;
        break;
      }
    } else {
      run = 0;
    }
  }
  if (q_on < 0) return false;

  // J point: walk right from R until the slope stays quiet for 15 ms.
  const long quiet_run_j = ms(15);
  long j_point = -1;
  run = 0;
  for (long k = r_offset + ms(10); k + 1 < n; ++k) {
    if (std::abs(slope[k]) < quiet) {
      if (++run >= quiet_run_j) {
        j_point = k - quiet_run_j + 1;
        break;
      }
    } else {
      run = 0;
    }
  }
  if (j_point < 0 || j_point <= r_offset) return false;

  // Baseline from the PQ segment just before QRS onset.
  const long pq_lo = std::max<long>(0, q_on - ms(40));
  const long pq_hi = std::max<long>(pq_lo + 1, q_on - ms(5));
  const double baseline = x.segment(pq_lo, pq_hi - pq_lo).mean();

  // T apex: largest departure from baseline in the ST-T search window.
  const long t_lo = std::min<long>(n - 2, j_point + ms(40));
  const long t_hi = std::min<long>(n - 2, j_point + ms(450));
  if (t_hi <= t_lo) return false;
  long t_peak = -1;
  double t_amp = 0.0;
  for (long k = t_lo; k <= t_hi; ++k) {
    const double a = std::abs(x[k] - baseline);
    if (a > t_amp) {
      t_amp = a;
      t_peak = k;
    }
  }
  if (t_peak < 0 || t_amp <= 0.0) return false;
  const double t_sign = x[t_peak] >= baseline ? 1.0 : -1.0;

  // T end by the tangent method: steepest post-apex return toward baseline,
  // extrapolated to the baseline crossing.
  const long d_hi = std::min<long>(n - 2, t_peak + ms(250));
  long steep = -1;
  double steep_slope = 0.0;
  for (long k = t_peak + 1; k <= d_hi; ++k) {
    const double s = t_sign * slope[k];
    if (s < steep_slope) {
      steep_slope = s;
      steep = k;
    }
  }
  if (steep < 0 || steep_slope >= 0.0) return false;
  const double cross = static_cast<double>(steep) + (baseline - x[steep]) / slope[steep];
  long t_end = std::lround(cross);
  if (t_end <= t_peak) return false;
  t_end = std::min<long>(t_end, n - 1);

  beat->q_on = q_on;
  beat->r_peak = r_offset;
  beat->j_point = j_point;
  beat->t_peak = t_peak;
  beat->t_end = t_end;
  return beat->q_on < beat->r_peak && beat->r_peak < beat->j_point &&
         beat->j_point < beat->t_peak && beat->t_peak < beat->t_end;
}

void MmaTwaAccumulator::add_beat(const Eigen::VectorXd& jt_uv) {
  Eigen::VectorXd& stream = beats_ % 2 == 0 ? even_ : odd_;
  if (stream.size() == 0) {
    stream = jt_uv;
  } else {
    if (stream.size() != jt_uv.size())
      throw DataError("JT segments must share one length for alternans analysis");
    for (Eigen::Index k = 0; k < stream.size(); ++k) {
      const double update = fraction_ * (jt_uv[k] - stream[k]);
      stream[k] += std::clamp(update, -cap_uv_, cap_uv_);
    }
  }
  ++beats_;
}

double MmaTwaAccumulator::twa_uv() const {
  if (even_.size() == 0 || odd_.size() == 0 || even_.size() != odd_.size()) return 0.0;
  return (even_ - odd_).cwiseAbs().maxCoeff();
}

double mma_twa(const std::vector<Eigen::VectorXd>& jt_segments) {
  if (static_cast<long>(jt_segments.size()) < kMinTwaBeats)
    throw DataError("insufficient clean beats for alternans (need at least 64)");
  MmaTwaAccumulator acc;
  for (const Eigen::VectorXd& seg : jt_segments) acc.add_beat(seg);
  return acc.twa_uv();
}

namespace {

// Largest 5-smooth (2^a 3^b 5^c) integer <= n; keeps the mixed-radix FFT
// away from large prime lengths, where it degrades to quadratic time.
Eigen::Index smooth_fft_size(Eigen::Index n) {
  Eigen::Index best = 1;
  for (Eigen::Index p5 = 1; p5 <= n; p5 *= 5)
    for (Eigen::Index p3 = p5; p3 <= n; p3 *= 3) {
      Eigen::Index p2 = p3;
      while (p2 * 2 <= n) p2 *= 2;
      best = std::max(best, p2);
    }
  return best;
}

// One-sided Hann-window band power of a uniformly sampled series between
// (0, f_high]; normalization recovers a sinusoid's variance A^2/2 when its
// frequency lies inside the band. The series is truncated to an FFT-friendly
// length (negligible for the long records this is applied to).
double band_power(const Eigen::VectorXd& full_series, double fs, double f_high) {
  const Eigen::VectorXd series = full_series.head(smooth_fft_size(full_series.size()));
  const Eigen::Index m = series.size();
  if (m < 4) return 0.0;
  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(m - 1));
  const Eigen::VectorXd x = (series.array() - series.mean()) * w.array();
  const double wss = w.squaredNorm();
  const double df = fs / static_cast<double>(m);
  const Eigen::Index j_max = static_cast<Eigen::Index>(std::floor(f_high / df));

  Eigen::FFT<double> fft;
  std::vector<double> xv(x.data(), x.data() + m);
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, xv);

  double power = 0.0;
  for (Eigen::Index j = 1; j <= j_max && j < m / 2; ++j)
    power += 2.0 * std::norm(spectrum[static_cast<size_t>(j)]) /
             (static_cast<double>(m) * wss);
  return power;
}

}  // namespace

PrdResult prd(const Eigen::Matrix3Xd& t_vectors_uv, const Eigen::VectorXd& beat_times_s,
              const PrdConfig& config) {
  const Eigen::Index n = t_vectors_uv.cols();
  if (n != beat_times_s.size()) throw DataError("T vectors and beat times differ in length");
  if (n < 3) throw DataError("too few T vectors");

  std::vector<double> angles, times;
  PrdResult out;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Eigen::Vector3d a = t_vectors_uv.col(i);
    const Eigen::Vector3d b = t_vectors_uv.col(i + 1);
    const double na = a.norm(), nb = b.norm();
    if (na < config.norm_floor_uv || nb < config.norm_floor_uv) {
      ++out.pairs_excluded;
      continue;
    }
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    angles.push_back(std::acos(c) * 180.0 / std::numbers::pi);
    times.push_back(beat_times_s[i + 1]);
    ++out.pairs_used;
  }
  const long total_pairs = out.pairs_used + out.pairs_excluded;
  if (total_pairs == 0 ||
      static_cast<double>(out.pairs_excluded) >
          config.max_excluded_frac * static_cast<double>(total_pairs))
    throw DataError("too many degenerate T vectors");
  if (out.pairs_used < 3) throw DataError("too few usable T-vector pairs");
  if (times.back() - times.front() < config.min_span_s)
    throw DataError("need at least 10 minutes of T vectors");

  // Linear resampling of the dT series.
  const double fs = config.resample_hz;
  const double t0 = times.front();
  const Eigen::Index m =
      static_cast<Eigen::Index>(std::floor((times.back() - t0) * fs)) + 1;
  Eigen::VectorXd resampled(m);
  size_t knot = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = t0 + static_cast<double>(i) / fs;
    while (knot + 1 < times.size() && times[knot + 1] < t) ++knot;
    if (knot + 1 >= times.size()) {
      resampled[i] = angles.back();
      continue;
    }
    const double alpha = std::clamp((t - times[knot]) / (times[knot + 1] - times[knot]), 0.0, 1.0);
    resampled[i] = (1.0 - alpha) * angles[knot] + alpha * angles[knot + 1];
  }
  out.prd_deg2 = band_power(resampled, fs, config.band_high_hz);
  return out;
}

double stv_qt(const Eigen::VectorXd& qt_series_ms) {
  constexpr Eigen::Index kWindow = 30;
  const Eigen::Index n = qt_series_ms.size();
  if (n < kWindow) throw DataError("need at least 30 consecutive QT intervals");
  std::vector<double> window_values;
  window_values.reserve(static_cast<size_t>(n - kWindow + 1));
  for (Eigen::Index start = 0; start + kWindow <= n; ++start) {
    double sum = 0.0;
    for (Eigen::Index i = start; i + 1 < start + kWindow; ++i)
      sum += std::abs(qt_series_ms[i + 1] - qt_series_ms[i]);
    window_values.push_back(sum / (static_cast<double>(kWindow) * std::numbers::sqrt2));
  }
  std::sort(window_values.begin(), window_values.end());
  const size_t nw = window_values.size();
  return nw % 2 == 1 ? window_values[nw / 2]
                     : 0.5 * (window_values[nw / 2 - 1] + window_values[nw / 2]);
}

IntervalMarkers interval_markers(const BeatWindow& median_beat) {
  median_beat.validate_fiducials();
  if (!(median_beat.rate_hz > 0.0)) throw DataError("beat window lacks a sampling rate");
  IntervalMarkers out;
  const double rate = median_beat.rate_hz;
  auto ms = [&](double m) { return std::max<long>(1, std::lround(m * 1e-3 * rate)); };

  const long pq_lo = std::max<long>(0, median_beat.q_on - ms(40));
  const long pq_hi = std::max(pq_lo + 1, median_beat.q_on - ms(5));
  const long lead_count = median_beat.samples_uv.rows();

  // Baseline stability on the reference lead.
  const long ref = reference_lead(median_beat);
  {
    const Eigen::VectorXd pq =
        median_beat.samples_uv.row(ref).segment(pq_lo, pq_hi - pq_lo);
    const double sd = std::sqrt((pq.array() - pq.mean()).square().mean());
    if (sd > 20.0) {
      out.note = "unstable baseline (PQ segment)";
      return out;
    }
  }

  out.tpte_ms =
      static_cast<double>(median_beat.t_end - median_beat.t_peak) * 1000.0 / rate;

  std::vector<double> j_uv(static_cast<size_t>(lead_count), 0.0);
  for (long lead = 0; lead < lead_count; ++lead) {
    const double baseline =
        median_beat.samples_uv.row(lead).segment(pq_lo, pq_hi - pq_lo).mean();
    j_uv[static_cast<size_t>(lead)] =
        median_beat.samples_uv(lead, median_beat.j_point) - baseline;
  }
  out.jpoint_uv = j_uv.empty() ? 0.0 : *std::max_element(j_uv.begin(), j_uv.end());

  // Early repolarization: J >= 100 uV in two adjacent leads of the inferior
  // or lateral group (in the group's conventional order).
  const std::vector<std::vector<std::string>> groups = {
      {"II", "III", "aVF"}, {"I", "aVL", "V4", "V5", "V6"}};
  auto j_of = [&](const std::string& name) -> double {
    for (size_t i = 0; i < median_beat.lead_names.size(); ++i)
      if (median_beat.lead_names[i] == name) return j_uv[i];
    return 0.0;
  };
  for (const auto& group : groups) {
    for (size_t i = 0; i + 1 < group.size(); ++i) {
      if (j_of(group[i]) >= 100.0 && j_of(group[i + 1]) >= 100.0) {
        out.early_repol = true;
        break;
      }
    }
    if (out.early_repol) break;
  }
  out.valid = true;
  return out;
}

int fractionation_index(const Eigen::VectorXd& qrs_uv, double rate_hz) {
  if (!(rate_hz > 0.0)) throw DataError("sampling rate must be positive");
  const Eigen::Index n = qrs_uv.size();
  if (n < 3) return 0;

  // Band-limit to 150 Hz when the sampling rate allows higher content.
  Eigen::VectorXd y = qrs_uv;
  if (rate_hz > 300.0) {
    Biquad lp = Biquad::lowpass(150.0, rate_hz);
    for (Eigen::Index k = 0; k < n; ++k) y[k] = lp.step(y[k]);
  }

  const double ptp = y.maxCoeff() - y.minCoeff();
  if (ptp <= 0.0) return 0;
  const double swing_cut = 0.05 * ptp;

  // Maximal monotone runs of the derivative; count those with enough swing.
  int count = 0;
  Eigen::Index run_start = 0;
  int run_sign = 0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double d = y[k + 1] - y[k];
    const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (sign == run_sign) continue;
    if (run_sign != 0 && std::abs(y[k] - y[run_start]) >= swing_cut) ++count;
    run_start = k;
    run_sign = sign;
  }
  if (run_sign != 0 && std::abs(y[n - 1] - y[run_start]) >= swing_cut) ++count;
  return count;
}

namespace {

double folded_angle_deg(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  const double c = std::clamp(std::abs(a.dot(b)) / (na * nb), 0.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace

SvdBattery twave_svd_battery(const Eigen::MatrixXd& qrs_uv, const Eigen::MatrixXd& t_uv) {
  if (qrs_uv.rows() != 8 || t_uv.rows() != 8)
    throw DataError("need 8 independent leads (I, II, V1-V6)");
  if (qrs_uv.cols() < 2 || t_uv.cols() < 2)
    throw DataError("QRS and T segments must each span at least 2 samples");
  SvdBattery out;

  // Combined decomposition for the shared 3-component loop space.
  Eigen::MatrixXd combined(8, qrs_uv.cols() + t_uv.cols());
  combined << qrs_uv, t_uv;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_all(combined, Eigen::ComputeThinU);
  if (svd_all.singularValues()[0] > 0.0) {
    const Eigen::MatrixXd u3 = svd_all.matrixU().leftCols(3);
    const Eigen::MatrixXd p_qrs = u3.transpose() * qrs_uv;  // 3 x nq
    const Eigen::MatrixXd p_t = u3.transpose() * t_uv;      // 3 x nt

    Eigen::Index t_dom_col = 0;
    double t_dom_norm = 0.0;
    for (Eigen::Index c = 0; c < p_t.cols(); ++c) {
      const double nn = p_t.col(c).norm();
      if (nn > t_dom_norm) {
        t_dom_norm = nn;
        t_dom_col = c;
      }
    }
    double qrs_max = 0.0;
    for (Eigen::Index c = 0; c < p_qrs.cols(); ++c)
      qrs_max = std::max(qrs_max, p_qrs.col(c).norm());
    if (t_dom_norm > 0.0 && qrs_max > 0.0) {
      Eigen::Vector3d t_dir = p_t.col(t_dom_col) / t_dom_norm;
      if (t_dir.dot(p_t.rowwise().sum()) < 0.0) t_dir = -t_dir;
      double cos_sum = 0.0;
      long cos_count = 0;
      for (Eigen::Index c = 0; c < p_qrs.cols(); ++c) {
        const double nn = p_qrs.col(c).norm();
        if (nn <= 0.7 * qrs_max) continue;
        cos_sum += p_qrs.col(c).dot(t_dir) / nn;
        ++cos_count;
      }
      if (cos_count > 0) {
        out.tcrt = cos_sum / static_cast<double>(cos_count);
        out.tcrt_valid = true;
      }
    }
  }
  if (!out.tcrt_valid) out.note = "degenerate QRS/T loops; ";

  // T-segment decomposition for TWR, TMD, and TLD.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_t(t_uv, Eigen::ComputeThinU);
  const Eigen::VectorXd sv = svd_t.singularValues();
  const double total_energy = sv.squaredNorm();
  if (total_energy > 0.0) {
    double tail = 0.0;
    for (Eigen::Index k = 3; k < sv.size(); ++k) tail += sv[k] * sv[k];
    out.twr = tail / total_energy;
    out.twr_valid = true;
  } else {
    out.note += "all-zero T segment; ";
  }

  long rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > 1e-12 * sv[0]) ++rank;

  if (rank >= 1) {
    // Lead reconstruction vectors in the first two components.
    const double s0 = sv[0];
    const double s1 = sv.size() > 1 ? sv[1] : 0.0;
    std::vector<Eigen::VectorXd> lead_vecs;
    for (Eigen::Index lead = 0; lead < 8; ++lead) {
      Eigen::Vector2d w(s0 * svd_t.matrixU()(lead, 0),
                        sv.size() > 1 ? s1 * svd_t.matrixU()(lead, 1) : 0.0);
      if (w.norm() > 0.0) lead_vecs.push_back(w);
    }
    if (lead_vecs.size() >= 2) {
      double sum = 0.0;
      long pairs = 0;
      for (size_t i = 0; i < lead_vecs.size(); ++i)
        for (size_t j = i + 1; j < lead_vecs.size(); ++j) {
          sum += folded_angle_deg(lead_vecs[i], lead_vecs[j]);
          ++pairs;
        }
      out.tmd_deg = sum / static_cast<double>(pairs);
      out.tmd_valid = true;
    }

    // T-loop vectors in the first three components.
    const Eigen::Index nc = std::min<Eigen::Index>(3, svd_t.matrixU().cols());
    const Eigen::MatrixXd loop = svd_t.matrixU().leftCols(nc).transpose() * t_uv;
    std::vector<Eigen::VectorXd> loop_vecs;
    for (Eigen::Index c = 0; c < loop.cols(); ++c)
      if (loop.col(c).norm() > 1e-12 * sv[0]) loop_vecs.push_back(loop.col(c));
    if (loop_vecs.size() >= 2) {
      double sum = 0.0;
      long pairs = 0;
      for (size_t i = 0; i < loop_vecs.size(); ++i)
        for (size_t j = i + 1; j < loop_vecs.size(); ++j) {
          sum += folded_angle_deg(loop_vecs[i], loop_vecs[j]);
          ++pairs;
        }
      out.tld = sum / static_cast<double>(pairs);
      out.tld_valid = true;
    }
  }
  if (!out.tmd_valid || !out.tld_valid) out.note += "rank-deficient T segment";
  return out;
}

}  // namespace holterisk
