#pragma once

#include <Eigen/Dense>
#include <string>

#include "holterisk/beats.hpp"
#include "holterisk/hrv.hpp"
#include "holterisk/markers.hpp"
#include "holterisk/record.hpp"
#include "holterisk/repol.hpp"

namespace holterisk {

// End-to-end Holter analysis: QRS detection, beat classification, and the
// full marker battery, computed over bounded working memory so that 24 h
// multi-lead records stream through without being loaded whole.
struct AnalyzerConfig {
  QrsConfig qrs;
  SpectralConfig spectral;
  PrsaConfig prsa;
  PrdConfig prd;
  double segment_s = 300.0;         // repolarization reporting segment
  long min_segment_beats = 32;      // mean-beat support needed per segment
  double min_twa_rr_ms = 500.0;     // alternans restricted to <= 120 bpm
  std::string detection_lead = "II";  // falls back to the highest-energy lead
  Eigen::Index chunk_frames = 1 << 16;
};

struct RecordSummary {
  std::string record_id;
  double duration_s = 0.0;
  double rate_hz = 0.0;
  int lead_count = 0;
  int detection_lead = -1;  // lead index the detector ran on
  long beat_count = 0;
  long normal_count = 0;
  long ventricular_count = 0;
  long artifact_count = 0;
  long segments_analyzed = 0;  // repolarization segments with enough beats
};

struct AnalysisResult {
  RecordSummary summary;
  MarkerVector markers;  // always the full battery; absent inputs flagged
};

// Whole-record analysis of an in-memory record (tests, short strips).
AnalysisResult analyze_record(const HolterRecord& record,
                              const AnalyzerConfig& config = {},
                              const std::string& record_id = "");

// Streaming analysis of an on-disk container. Peak memory is bounded by the
// chunk size plus a ~1 s multi-lead context window, independent of duration.
AnalysisResult analyze_file(const std::string& header_path,
                            const AnalyzerConfig& config = {},
                            const std::string& data_path = "");

}  // namespace holterisk
