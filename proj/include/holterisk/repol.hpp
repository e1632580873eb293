#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "holterisk/errors.hpp"

namespace holterisk {

// A beat-aligned multi-lead sample window with fiducial offsets.
struct BeatWindow {
  Eigen::MatrixXd samples_uv;  // lead x sample
  std::vector<std::string> lead_names;
  double rate_hz = 0.0;
  long q_on = -1;
  long r_peak = -1;
  long j_point = -1;
  long t_peak = -1;
  long t_end = -1;

  void validate_fiducials() const;  // q_on < r_peak < j_point < t_peak < t_end
};

// Locates q_on, j_point, t_peak, and t_end around a known R position on the
// reference lead (lead II when present, else the largest-amplitude lead).
// Returns false when the morphology is not locatable.
bool locate_fiducials(BeatWindow* beat, long r_offset);

// Modified-moving-average T-wave alternans over a sequence of equal-length
// JT segments (one per beat, single lead). Even and odd beat streams are
// tracked as moving averages with per-beat updates of 1/8 of the residual,
// capped at 32 uV per sample; TWA is the maximum |even - odd| over the
// segment after the last beat.
class MmaTwaAccumulator {
 public:
  explicit MmaTwaAccumulator(double update_fraction = 0.125, double update_cap_uv = 32.0)
      : fraction_(update_fraction), cap_uv_(update_cap_uv) {}

  void add_beat(const Eigen::VectorXd& jt_uv);
  long beats() const { return beats_; }
  double twa_uv() const;

 private:
  double fraction_;
  double cap_uv_;
  Eigen::VectorXd even_, odd_;
  long beats_ = 0;
};

inline constexpr long kMinTwaBeats = 64;

// Batch wrapper; requires at least kMinTwaBeats beats.
double mma_twa(const std::vector<Eigen::VectorXd>& jt_segments);

struct PrdConfig {
  double resample_hz = 2.0;
  double band_high_hz = 0.1;
  double min_span_s = 600.0;        // 10 minutes of T vectors
  double norm_floor_uv = 1.0;       // degenerate T-vector exclusion
  double max_excluded_frac = 0.25;
};

struct PrdResult {
  double prd_deg2 = 0.0;
  long pairs_used = 0;
  long pairs_excluded = 0;
};

// Periodic repolarization dynamics: the angle series between successive
// 3-component T-wave vectors, resampled to 2 Hz; PRD is the spectral power
// at or below 0.1 Hz (deg^2).
PrdResult prd(const Eigen::Matrix3Xd& t_vectors_uv, const Eigen::VectorXd& beat_times_s,
              const PrdConfig& config = {});

// Short-term QT variability: sum_i |QT_{i+1} - QT_i| / (30 sqrt(2)) over
// 30-interval windows; the median across sliding windows is reported.
double stv_qt(const Eigen::VectorXd& qt_series_ms);

struct IntervalMarkers {
  double tpte_ms = 0.0;
  double jpoint_uv = 0.0;  // maximum J elevation across leads
  bool early_repol = false;
  bool valid = false;
  std::string note;
};

// T-peak-to-T-end (tangent method for T end), J-point amplitude relative to
// the PQ baseline, and the early-repolarization flag (J >= 100 uV in two
// adjacent inferior or lateral leads). Invalid when the PQ baseline is
// unstable.
IntervalMarkers interval_markers(const BeatWindow& median_beat);

// Count of monotone deflections of the band-limited (<= 150 Hz) derivative
// within the QRS whose amplitude swing exceeds 5% of the QRS peak-to-peak.
int fractionation_index(const Eigen::VectorXd& qrs_uv, double rate_hz);

struct SvdBattery {
  double tcrt = 0.0;     // [-1, 1]
  double twr = 0.0;      // [0, 1]
  double tmd_deg = 0.0;  // [0, 180]
  double tld = 0.0;      // >= 0
  bool tcrt_valid = false;
  bool twr_valid = false;
  bool tmd_valid = false;
  bool tld_valid = false;
  std::string note;
};

// SVD T-wave morphology battery over 8 independent leads (I, II, V1-V6).
// TCRT: mean cosine between the dominant T direction and QRS-loop vectors
// above 70% of the maximum magnitude, in the first-3-component space of the
// combined QRS+T decomposition. TWR: non-dipolar fraction of the T-segment
// singular spectrum. TMD/TLD: mean pairwise angles of lead vectors (first
// two components) / T-loop vectors (first three components). All outputs are
// invariant under global positive scaling.
SvdBattery twave_svd_battery(const Eigen::MatrixXd& qrs_uv, const Eigen::MatrixXd& t_uv);

}  // namespace holterisk
