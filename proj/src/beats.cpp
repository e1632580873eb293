#include "holterisk/beats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace holterisk {

const char* to_string(BeatLabel label) {
  switch (label) {
    case BeatLabel::normal: return "normal";
    case BeatLabel::ventricular: return "ventricular";
    case BeatLabel::artifact: return "artifact";
  }
  return "?";
}

Biquad Biquad::lowpass(double cutoff_hz, double rate_hz) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate_hz;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / std::numbers::sqrt2;  // Q = 1/sqrt(2)
  const double a0 = 1.0 + alpha;
  Biquad q;
  q.b0 = (1.0 - cw) / 2.0 / a0;
  q.b1 = (1.0 - cw) / a0;
  q.b2 = q.b0;
  q.a1 = -2.0 * cw / a0;
  q.a2 = (1.0 - alpha) / a0;
  return q;
}

Biquad Biquad::highpass(double cutoff_hz, double rate_hz) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate_hz;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / std::numbers::sqrt2;
  const double a0 = 1.0 + alpha;
  Biquad q;
  q.b0 = (1.0 + cw) / 2.0 / a0;
  q.b1 = -(1.0 + cw) / a0;
  q.b2 = q.b0;
  q.a1 = -2.0 * cw / a0;
  q.a2 = (1.0 - alpha) / a0;
  return q;
}

StreamingQrsDetector::StreamingQrsDetector(double rate_hz, const QrsConfig& config)
    : rate_hz_(rate_hz), config_(config) {
  if (!(rate_hz >= kMinDetectionRateHz && rate_hz <= kMaxDetectionRateHz))
    throw DataError("sampling rate outside the supported range [128, 2000] Hz");
  hp_ = Biquad::highpass(config.band_low_hz, rate_hz);
  lp_ = Biquad::lowpass(config.band_high_hz, rate_hz);
  window_ = std::max<long>(1, std::lround(config.integration_ms * 1e-3 * rate_hz));
  refractory_ = std::max<long>(1, std::lround(config.refractory_ms * 1e-3 * rate_hz));
  sq_ring_.assign(static_cast<size_t>(window_), 0.0);
  bp_ring_.assign(static_cast<size_t>(window_ + 2), 0.0);
  raw_ring_.assign(static_cast<size_t>(window_ + 2), 0.0);
}

namespace {
constexpr double kSearchbackFactor = 1.66;  // missed-beat trigger, in mean RRs
constexpr double kSearchbackFloor = 0.125;  // candidate must clear this * threshold
}  // namespace

long StreamingQrsDetector::refine_fiducial(long peak_index) const {
  // peak_index is the moving-window-integral peak; the R fiducial is the
  // largest raw excursion from the local baseline inside the integration
  // window behind it (the band-passed wave lags the crest by its group delay,
  // so it cannot serve as the fiducial itself).
  const long lo = std::max<long>(0, peak_index - window_);
  double baseline = 0.0;
  for (long s = lo; s <= peak_index; ++s)
    baseline += raw_ring_[static_cast<size_t>(s % (window_ + 2))];
  baseline /= static_cast<double>(peak_index - lo + 1);
  long best = lo;
  double best_amp = -1.0;
  for (long s = lo; s <= peak_index; ++s) {
    const double amp = std::abs(raw_ring_[static_cast<size_t>(s % (window_ + 2))] - baseline);
    if (amp > best_amp) {
      best_amp = amp;
      best = s;
    }
  }
  return best;
}

void StreamingQrsDetector::accept_beat(long peak_index, long fiducial) {
  if (last_peak_ >= 0) {
    const double rr = static_cast<double>(peak_index - last_peak_);
    rr_avg_ = rr_avg_ == 0.0 ? rr : 0.875 * rr_avg_ + 0.125 * rr;
  }
  last_peak_ = peak_index;
  cand_value_ = -1.0;
  cand_index_ = -1;
  cand_fiducial_ = -1;
  if (beats_.empty() || fiducial > beats_.back()) beats_.push_back(fiducial);
}

void StreamingQrsDetector::consider_peak(double peak_value, long peak_index) {
  if (last_peak_ >= 0 && peak_index - last_peak_ < refractory_) return;  // suppressed
  if (peak_value > threshold_) {
    accept_beat(peak_index, refine_fiducial(peak_index));
    spki_ = 0.125 * peak_value + 0.875 * spki_;
  } else {
    npki_ = 0.125 * peak_value + 0.875 * npki_;
    // Remember the strongest rejected peak for a possible searchback rescue.
    if (peak_value > cand_value_ &&
        peak_value > kSearchbackFloor * threshold_) {
      cand_value_ = peak_value;
      cand_index_ = peak_index;
      cand_fiducial_ = refine_fiducial(peak_index);
    }
  }
  threshold_ = npki_ + 0.25 * (spki_ - npki_);
}

void StreamingQrsDetector::process(const double* samples_uv, long count) {
  for (long i = 0; i < count; ++i) {
    const double bp = lp_.step(hp_.step(samples_uv[i]));
    bp_ring_[static_cast<size_t>(n_ % (window_ + 2))] = bp;
    raw_ring_[static_cast<size_t>(n_ % (window_ + 2))] = samples_uv[i];
    const double diff = bp - prev_bp_;
    prev_bp_ = bp;
    const double sq = diff * diff;
    const size_t slot = static_cast<size_t>(n_ % window_);
    running_sum_ += sq - sq_ring_[slot];
    sq_ring_[slot] = sq;
    const double mwi = running_sum_ / static_cast<double>(window_);

    m2_ = m1_;
    m1_ = m0_;
    m0_ = mwi;
    // Local maximum at the previous sample (plateaus peak at their first sample).
    if (n_ >= 2 && m1_ > m2_ && m1_ >= m0_) consider_peak(m1_, n_ - 1);
    // Searchback: a beat is overdue, so rescue the best rejected peak. Its
    // amplitude feeds the signal estimate at the reduced searchback weight.
    if (last_peak_ >= 0 && rr_avg_ > 0.0 && cand_fiducial_ >= 0 &&
        static_cast<double>(n_ - last_peak_) > kSearchbackFactor * rr_avg_) {
      spki_ = 0.25 * cand_value_ + 0.75 * spki_;
      threshold_ = npki_ + 0.25 * (spki_ - npki_);
      accept_beat(cand_index_, cand_fiducial_);
    }
    ++n_;
  }
}

std::vector<long> detect_qrs(const Eigen::VectorXd& lead_uv, double rate_hz,
                             const QrsConfig& config) {
  if (!(rate_hz >= kMinDetectionRateHz && rate_hz <= kMaxDetectionRateHz))
    throw DataError("sampling rate outside the supported range [128, 2000] Hz");
  if (static_cast<double>(lead_uv.size()) < 2.0 * rate_hz)
    throw DataError("signal too short for QRS detection (need at least 2 s)");
  if (lead_uv.size() == 0 || lead_uv.maxCoeff() - lead_uv.minCoeff() < config.noise_floor_uv)
    throw DataError("no detectable activity");
  StreamingQrsDetector det(rate_hz, config);
  det.process(lead_uv);
  det.finish();
  return det.take_beats();
}

Eigen::VectorXd beat_window(const Eigen::VectorXd& lead_uv, long r_index, double rate_hz) {
  const long half = std::lround(0.100 * rate_hz);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * half + 1);
  for (long k = -half; k <= half; ++k) {
    const long s = r_index + k;
    if (s >= 0 && s < lead_uv.size()) w[k + half] = lead_uv[s];
  }
  return w;
}

double qrs_width_ms(const Eigen::VectorXd& lead_uv, long r_index, double rate_hz) {
  const long half = std::lround(0.150 * rate_hz);
  const long lo = std::max<long>(0, r_index - half);
  const long hi = std::min<long>(lead_uv.size() - 1, r_index + half);
  if (hi <= lo) return 0.0;
  const double baseline = 0.5 * (lead_uv[lo] + lead_uv[hi]);
  double peak = 0.0;
  for (long s = lo; s <= hi; ++s) peak = std::max(peak, std::abs(lead_uv[s] - baseline));
  if (peak <= 0.0) return 0.0;
  const double cut = 0.2 * peak;
  long first = -1, last = -1;
  for (long s = lo; s <= hi; ++s) {
    if (std::abs(lead_uv[s] - baseline) >= cut) {
      if (first < 0) first = s;
      last = s;
    }
  }
  return (static_cast<double>(last - first) + 1.0) * 1000.0 / rate_hz;
}

double template_correlation(const Eigen::VectorXd& lead_uv, long r_index,
                            const Eigen::VectorXd& template_window, double rate_hz) {
  const Eigen::VectorXd w = beat_window(lead_uv, r_index, rate_hz);
  if (w.size() != template_window.size()) return 0.0;
  const Eigen::VectorXd a = w.array() - w.mean();
  const Eigen::VectorXd b = template_window.array() - template_window.mean();
  const double denom = std::sqrt(a.squaredNorm() * b.squaredNorm());
  if (denom <= 0.0) return 0.0;
  return a.dot(b) / denom;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<BeatLabel> classify_beats(const Eigen::VectorXd& lead_uv, double rate_hz,
                                      const std::vector<long>& indices) {
  const size_t n = indices.size();
  if (n < 10) throw DataError("insufficient beats for template");
  std::vector<double> rr(n - 1);
  for (size_t k = 0; k + 1 < n; ++k)
    rr[k] = static_cast<double>(indices[k + 1] - indices[k]) * 1000.0 / rate_hz;
  const double global_median = median_of(rr);

  std::vector<BeatLabel> labels(n, BeatLabel::normal);
  for (size_t k = 1; k < n; ++k)
    if (rr[k - 1] < 200.0 || rr[k - 1] > 3000.0) labels[k] = BeatLabel::artifact;

  // Template: average of regular, artifact-free beats (both neighbor RRs
  // within 20% of the global median).
  Eigen::VectorXd tmpl;
  long contributors = 0;
  for (size_t k = 1; k + 1 < n; ++k) {
    if (labels[k] != BeatLabel::normal) continue;
    if (std::abs(rr[k - 1] - global_median) > 0.2 * global_median) continue;
    if (std::abs(rr[k] - global_median) > 0.2 * global_median) continue;
    Eigen::VectorXd w = beat_window(lead_uv, indices[k], rate_hz);
    if (tmpl.size() == 0) tmpl = Eigen::VectorXd::Zero(w.size());
    tmpl += w;
    ++contributors;
    if (contributors >= 256) break;  // plenty for a stable template
  }
  const bool have_template = contributors >= 5;
  if (have_template) tmpl /= static_cast<double>(contributors);

  for (size_t k = 1; k < n; ++k) {
    if (labels[k] == BeatLabel::artifact) continue;
    // Local reference: median of up to five RR values on each side, skipping
    // the interval that ends at this beat.
    std::vector<double> local;
    for (long j = static_cast<long>(k) - 6; j <= static_cast<long>(k) + 4; ++j) {
      if (j < 0 || j >= static_cast<long>(rr.size())) continue;
      if (j == static_cast<long>(k) - 1) continue;
      local.push_back(rr[static_cast<size_t>(j)]);
    }
    const double ref = local.empty() ? global_median : median_of(local);
    const bool premature = rr[k - 1] <= 0.8 * ref;
    if (!premature) continue;
    const bool wide = qrs_width_ms(lead_uv, indices[k], rate_hz) > 120.0;
    const bool dissimilar =
        have_template && template_correlation(lead_uv, indices[k], tmpl, rate_hz) < 0.9;
    if (wide || dissimilar) labels[k] = BeatLabel::ventricular;
  }
  return labels;
}

void fill_nn_series(BeatAnnotations* ann, double rate_hz) {
  const size_t n = ann->indices.size();
  ann->rr_ms.resize(n >= 1 ? static_cast<Eigen::Index>(n - 1) : 0);
  for (size_t k = 0; k + 1 < n; ++k)
    ann->rr_ms[static_cast<Eigen::Index>(k)] =
        static_cast<double>(ann->indices[k + 1] - ann->indices[k]) * 1000.0 / rate_hz;
  std::vector<double> nn, t_end;
  for (size_t k = 0; k + 1 < n; ++k) {
    if (ann->labels[k] != BeatLabel::normal || ann->labels[k + 1] != BeatLabel::normal)
      continue;
    const double v = ann->rr_ms[static_cast<Eigen::Index>(k)];
    if (v < 200.0 || v > 3000.0) continue;
    nn.push_back(v);
    t_end.push_back(static_cast<double>(ann->indices[k + 1]) / rate_hz);
  }
  ann->nn_ms = Eigen::Map<const Eigen::VectorXd>(nn.data(), static_cast<Eigen::Index>(nn.size()));
  ann->nn_end_times_s =
      Eigen::Map<const Eigen::VectorXd>(t_end.data(), static_cast<Eigen::Index>(t_end.size()));
}

BeatAnnotations build_annotations(const Eigen::VectorXd& lead_uv, double rate_hz,
                                  const QrsConfig& config) {
  BeatAnnotations ann;
  ann.indices = detect_qrs(lead_uv, rate_hz, config);
  ann.labels = classify_beats(lead_uv, rate_hz, ann.indices);
  fill_nn_series(&ann, rate_hz);
  return ann;
}

BeatCounts count_markers(const std::vector<BeatLabel>& labels, const Eigen::VectorXd& rr_ms) {
  if (!labels.empty() && rr_ms.size() != static_cast<Eigen::Index>(labels.size()) - 1)
    throw DataError("RR series does not align with beat labels");
  BeatCounts counts;
  const size_t n = labels.size();
  size_t k = 0;
  while (k < n) {
    if (labels[k] != BeatLabel::ventricular) {
      ++k;
      continue;
    }
    counts.pvc_count += 1;
    size_t run_end = k;  // inclusive
    while (run_end + 1 < n && labels[run_end + 1] == BeatLabel::ventricular) {
      ++run_end;
      counts.pvc_count += 1;
    }
    const int run_len = static_cast<int>(run_end - k + 1);
    if (run_len >= 3) {
      double sum_rr = 0.0;
      for (size_t j = k; j < run_end; ++j) sum_rr += rr_ms[static_cast<Eigen::Index>(j)];
      const double duration_s = sum_rr / 1000.0;
      const double mean_rr = sum_rr / static_cast<double>(run_len - 1);
      const double mean_rate = mean_rr > 0.0 ? 60000.0 / mean_rr : 0.0;
      if (duration_s >= 30.0) {
        counts.sustained_count += 1;
      } else if (mean_rate >= 120.0) {
        NsvtEpisode ep;
        ep.start_beat = static_cast<long>(k);
        ep.beat_count = run_len;
        ep.mean_rate_bpm = mean_rate;
        ep.duration_s = duration_s;
        counts.nsvt.push_back(ep);
      }
    }
    k = run_end + 1;
  }
  return counts;
}

std::vector<VpcTachogram> extract_vpc_tachograms(const std::vector<BeatLabel>& labels,
                                                 const Eigen::VectorXd& rr_ms) {
  if (!labels.empty() && rr_ms.size() != static_cast<Eigen::Index>(labels.size()) - 1)
    throw DataError("RR series does not align with beat labels");
  std::vector<VpcTachogram> tachos;
  const long n = static_cast<long>(labels.size());
  auto is_sinus = [&](long beat) {
    return beat >= 0 && beat < n && labels[static_cast<size_t>(beat)] == BeatLabel::normal;
  };
  for (long k = 0; k < n; ++k) {
    if (labels[static_cast<size_t>(k)] != BeatLabel::ventricular) continue;
    // Need three sinus beats before (two pre intervals + coupling origin)
    // and at least one after the pause.
    if (!(is_sinus(k - 1) && is_sinus(k - 2) && is_sinus(k - 3))) continue;
    if (k - 3 < 0 || k >= rr_ms.size()) continue;
    const double pre1 = rr_ms[k - 3];  // between beats k-3 and k-2
    const double pre2 = rr_ms[k - 2];  // between beats k-2 and k-1
    const double coupling = rr_ms[k - 1];
    const double pause = rr_ms[k];
    const double ref = 0.5 * (pre1 + pre2);
    if (ref <= 0.0) continue;
    auto plausible = [&](double v) {
      return v >= 300.0 && v <= 2000.0 && std::abs(v - ref) <= 0.2 * ref;
    };
    if (!plausible(pre1) || !plausible(pre2)) continue;
    if (!(coupling <= 0.8 * ref)) continue;
    if (!(pause >= 1.2 * ref)) continue;

    std::vector<double> post;
    for (long j = k + 1; j < rr_ms.size() && post.size() < 15; ++j) {
      if (!(is_sinus(j) && is_sinus(j + 1))) break;
      const double v = rr_ms[j];
      if (!plausible(v)) break;
      post.push_back(v);
    }
    if (post.size() < 5) continue;
    VpcTachogram t;
    t.vpc_beat = k;
    t.pre_rr[0] = pre1;
    t.pre_rr[1] = pre2;
    t.coupling_ms = coupling;
    t.pause_ms = pause;
    t.post_rr = std::move(post);
    tachos.push_back(std::move(t));
  }
  return tachos;
}

std::string annotations_to_csv(const BeatAnnotations& ann, double rate_hz) {
  std::string out = "sample_index,time_s,label,rr_ms\n";
  char buf[128];
  for (size_t k = 0; k < ann.indices.size(); ++k) {
    const double t = static_cast<double>(ann.indices[k]) / rate_hz;
    if (k == 0) {
      std::snprintf(buf, sizeof(buf), "%ld,%.17g,%s,\n", ann.indices[k], t,
                    to_string(ann.labels[k]));
    } else {
      std::snprintf(buf, sizeof(buf), "%ld,%.17g,%s,%.17g\n", ann.indices[k], t,
                    to_string(ann.labels[k]), ann.rr_ms[static_cast<Eigen::Index>(k - 1)]);
    }
    out += buf;
  }
  return out;
}

}  // namespace holterisk
