#pragma once

#include <Eigen/Dense>
#include <vector>

#include "holterisk/beats.hpp"
#include "holterisk/errors.hpp"

namespace holterisk {

struct HrvTimeDomain {
  double sdnn_ms = 0.0;   // sample standard deviation (divisor N-1)
  double rmssd_ms = 0.0;  // RMS of successive differences
  long n_intervals = 0;
};

// Errors when fewer than 2 intervals are supplied.
HrvTimeDomain time_domain_hrv(const Eigen::VectorXd& nn_ms);

struct HrvFrequencyDomain {
  double vlf_ms2 = 0.0;  // 0.0033 - 0.04 Hz
  double lf_ms2 = 0.0;   // 0.04 - 0.15 Hz
  double hf_ms2 = 0.0;   // 0.15 - 0.40 Hz
  double total_ms2 = 0.0;
  double lf_hf_ratio = 0.0;  // NaN when hf is zero
  long windows_used = 0;
  long windows_excluded = 0;
};

struct SpectralConfig {
  double resample_hz = 4.0;
  double window_s = 300.0;     // 5-minute Hann windows
  double overlap = 0.5;
  double min_coverage = 0.8;   // NN time covered / window length
};

// Averaged Hann-window periodogram of the linearly resampled NN tachogram.
// Windows whose NN coverage falls below min_coverage (i.e. more than 20%
// of the window is interpolated across gaps) are excluded.
HrvFrequencyDomain frequency_domain_hrv(const Eigen::VectorXd& nn_ms,
                                        const Eigen::VectorXd& nn_end_times_s,
                                        const SpectralConfig& config = {});

struct TurbulenceResult {
  double to_percent = 0.0;
  double ts_ms_per_beat = 0.0;
  long tachogram_count = 0;
};

inline constexpr long kMinTachograms = 5;

// TO% = 100 * ((RR1 + RR2) - (RR-2 + RR-1)) / (RR-2 + RR-1), averaged over
// tachograms; TS = maximum least-squares slope over any 5 consecutive
// intervals of the tachogram-averaged post series.
TurbulenceResult heart_rate_turbulence(const std::vector<VpcTachogram>& tachograms);

enum class PrsaDirection { deceleration, acceleration };

struct PrsaConfig {
  int window_l = 20;            // averaged window spans [-L, L)
  double max_change_frac = 0.05;  // anchor plausibility filter
  long min_anchors = 100;       // tuned for 24 h recordings; configurable
};

struct PrsaComponent {
  double capacity_ms = 0.0;
  long anchor_count = 0;
};

// Phase-rectified signal averaging. Anchors are increases (deceleration) or
// decreases (acceleration) of successive NN intervals, excluding changes
// larger than max_change_frac of the pair mean (a symmetric filter, so
// DC(series) = -AC(reversed series) exactly). Capacity is the quarter sum
// (X0 + X1 - X-1 - X-2) / 4 of the anchor-aligned average.
PrsaComponent prsa_capacity(const Eigen::VectorXd& nn_ms, PrsaDirection direction,
                            const PrsaConfig& config = {});

struct PrsaResult {
  double dc_ms = 0.0;
  double ac_ms = 0.0;
  long anchor_count_dc = 0;
  long anchor_count_ac = 0;
};

PrsaResult prsa(const Eigen::VectorXd& nn_ms, const PrsaConfig& config = {});

}  // namespace holterisk
