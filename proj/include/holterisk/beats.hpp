#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "holterisk/errors.hpp"

namespace holterisk {

enum class BeatLabel { normal, ventricular, artifact };
const char* to_string(BeatLabel label);

struct BeatAnnotations {
  std::vector<long> indices;  // R fiducial sample positions, strictly increasing
  std::vector<BeatLabel> labels;
  Eigen::VectorXd rr_ms;          // |indices| - 1 successive intervals
  Eigen::VectorXd nn_ms;          // normal-to-normal subset of rr_ms
  Eigen::VectorXd nn_end_times_s; // time of each NN interval's ending beat
};

struct QrsConfig {
  double noise_floor_uv = 50.0;  // dynamic range below this is "no activity"
  double refractory_ms = 200.0;
  double band_low_hz = 5.0;
  double band_high_hz = 25.0;
  double integration_ms = 120.0;
};

inline constexpr double kMinDetectionRateHz = 128.0;
inline constexpr double kMaxDetectionRateHz = 2000.0;

// One second-order IIR section (transposed direct form II).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
  double z1 = 0.0, z2 = 0.0;

  static Biquad lowpass(double cutoff_hz, double rate_hz);
  static Biquad highpass(double cutoff_hz, double rate_hz);

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

// Incremental QRS detector: 5-25 Hz band-pass, squared derivative, moving
// window integration, adaptive dual thresholds with a refractory period, and
// a searchback pass that rescues low-slope (wide) beats when an expected beat
// fails to appear within 1.66 mean RR. All state is signal-derived, so
// detections are amplitude-scale invariant and shift along with the input.
// Feed chunks in order, then finish().
class StreamingQrsDetector {
 public:
  StreamingQrsDetector(double rate_hz, const QrsConfig& config = {});

  void process(const double* samples_uv, long count);
  void process(const Eigen::VectorXd& chunk) { process(chunk.data(), chunk.size()); }
  // No flush work is needed (the detector is causal); kept for symmetry.
  void finish() {}

  const std::vector<long>& beats() const { return beats_; }
  std::vector<long> take_beats() { return std::move(beats_); }
  long samples_seen() const { return n_; }
  double rate_hz() const { return rate_hz_; }

 private:
  void consider_peak(double peak_value, long peak_index);
  long refine_fiducial(long peak_index) const;
  void accept_beat(long peak_index, long fiducial);

  double rate_hz_;
  QrsConfig config_;
  Biquad hp_, lp_;
  long window_;  // integration window length in samples
  long refractory_;
  std::vector<double> sq_ring_;   // squared derivative, last `window_` values
  std::vector<double> bp_ring_;   // band-passed signal (threshold bookkeeping)
  std::vector<double> raw_ring_;  // raw samples for fiducial refinement
  double running_sum_ = 0.0;
  double prev_bp_ = 0.0;
  double m0_ = 0.0, m1_ = 0.0, m2_ = 0.0;  // last integrated values
  double spki_ = 0.0, npki_ = 0.0, threshold_ = 0.0;
  long n_ = 0;
  long last_peak_ = -1;
  double rr_avg_ = 0.0;  // EWMA of accepted RR in samples (0 until two beats)
  // Best sub-threshold integration peak since the last accepted beat; its raw
  // fiducial is refined eagerly while the sample ring still covers it.
  double cand_value_ = -1.0;
  long cand_index_ = -1;
  long cand_fiducial_ = -1;
  std::vector<long> beats_;
};

// Batch detection. Errors: rate outside [128, 2000] Hz, signal shorter than
// 2 s, or dynamic range below the noise floor ("no detectable activity").
std::vector<long> detect_qrs(const Eigen::VectorXd& lead_uv, double rate_hz,
                             const QrsConfig& config = {});

// Beat-morphology helpers shared by the batch classifier and the streaming
// analyzer.
double qrs_width_ms(const Eigen::VectorXd& lead_uv, long r_index, double rate_hz);
double template_correlation(const Eigen::VectorXd& lead_uv, long r_index,
                            const Eigen::VectorXd& template_window, double rate_hz);
// Beat window [r - 100 ms, r + 100 ms]; zero-padded at the signal edges.
Eigen::VectorXd beat_window(const Eigen::VectorXd& lead_uv, long r_index, double rate_hz);

// Rule-based labels: artifact for impossible RR (< 200 or > 3000 ms);
// ventricular for premature beats (RR <= 80% of the local median) that are
// wide (> 120 ms) or morphologically dissimilar (template correlation < 0.9).
std::vector<BeatLabel> classify_beats(const Eigen::VectorXd& lead_uv, double rate_hz,
                                      const std::vector<long>& indices);

// Full annotation pass: detect, classify, RR series, filtered NN series.
BeatAnnotations build_annotations(const Eigen::VectorXd& lead_uv, double rate_hz,
                                  const QrsConfig& config = {});

// NN filtering applied to an annotated beat stream: intervals between
// consecutive normal beats within [200, 3000] ms.
void fill_nn_series(BeatAnnotations* ann, double rate_hz);

struct NsvtEpisode {
  long start_beat = 0;
  int beat_count = 0;
  double mean_rate_bpm = 0.0;
  double duration_s = 0.0;
};

struct BeatCounts {
  long pvc_count = 0;
  std::vector<NsvtEpisode> nsvt;
  long sustained_count = 0;  // ventricular runs lasting >= 30 s
};

// PVC count and NSVT episodes (maximal runs of >= 3 consecutive ventricular
// beats, mean rate >= 120 bpm, duration < 30 s; longer runs are sustained).
BeatCounts count_markers(const std::vector<BeatLabel>& labels, const Eigen::VectorXd& rr_ms);

struct VpcTachogram {
  long vpc_beat = 0;          // index of the VPC in the beat sequence
  double pre_rr[2] = {0, 0};  // the two sinus intervals before the VPC
  double coupling_ms = 0.0;
  double pause_ms = 0.0;
  std::vector<double> post_rr;  // 5..15 sinus intervals after the pause
};

// Turbulence source data. A VPC qualifies when the coupling interval is
// <= 80% of the reference RR (mean of the two pre intervals), the pause is
// >= 120% of it, and the pre/post intervals are sinus, within [300, 2000] ms,
// and within 20% of the reference.
std::vector<VpcTachogram> extract_vpc_tachograms(const std::vector<BeatLabel>& labels,
                                                 const Eigen::VectorXd& rr_ms);

// Annotation export: sample_index,time_s,label,rr_ms (rr blank for the first
// beat).
std::string annotations_to_csv(const BeatAnnotations& ann, double rate_hz);

}  // namespace holterisk
