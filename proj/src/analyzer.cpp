#include "holterisk/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace holterisk {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Sequential frame supplier; rewind() restarts from the first frame so the
// analyzer can make its (at most three) passes over arbitrarily long records.
struct ChunkSource {
  virtual ~ChunkSource() = default;
  virtual void rewind() = 0;
  virtual Eigen::Index read(Eigen::MatrixXd* out, Eigen::Index max_frames) = 0;
};

struct MemorySource final : ChunkSource {
  const HolterRecord* record;
  Eigen::Index pos = 0;

  explicit MemorySource(const HolterRecord* r) : record(r) {}
  void rewind() override { pos = 0; }
  Eigen::Index read(Eigen::MatrixXd* out, Eigen::Index max_frames) override {
    const Eigen::Index take = std::min(max_frames, record->samples_uv.cols() - pos);
    if (take <= 0) return 0;
    *out = record->samples_uv.middleCols(pos, take);
    pos += take;
    return take;
  }
};

struct FileSource final : ChunkSource {
  std::string header_path, data_path;
  std::unique_ptr<HolterFileReader> reader;

  FileSource(std::string header, std::string data)
      : header_path(std::move(header)), data_path(std::move(data)) {
    rewind();
  }
  void rewind() override {
    reader = std::make_unique<HolterFileReader>(header_path, data_path);
  }
  Eigen::Index read(Eigen::MatrixXd* out, Eigen::Index max_frames) override {
    return reader->read_chunk(*out, max_frames);
  }
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Median over windowed short-term QT variability values, one value per
// length-30 sliding window inside each maximal run of valid QT intervals.
std::optional<std::pair<double, long>> stv_over_runs(const std::vector<double>& qt_ms) {
  constexpr size_t kWindow = 30;
  std::vector<double> windows;
  size_t i = 0;
  const size_t n = qt_ms.size();
  while (i < n) {
    if (!std::isfinite(qt_ms[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < n && std::isfinite(qt_ms[j])) ++j;
    if (j - i >= kWindow) {
      // Prefix sums of |successive difference| over the run.
      std::vector<double> prefix(j - i, 0.0);
      for (size_t k = i + 1; k < j; ++k)
        prefix[k - i] = prefix[k - i - 1] + std::abs(qt_ms[k] - qt_ms[k - 1]);
      for (size_t start = 0; start + kWindow <= j - i; ++start)
        windows.push_back((prefix[start + kWindow - 1] - prefix[start]) /
                          (static_cast<double>(kWindow) * std::numbers::sqrt2));
    }
    i = j;
  }
  if (windows.empty()) return std::nullopt;
  return std::make_pair(median_of(windows), static_cast<long>(windows.size()));
}

struct Engine {
  const HolterHeader& header;
  const AnalyzerConfig& cfg;
  ChunkSource& src;

  double rate;
  long total;       // frames per lead
  int leads;
  long span_left, span_right, span;  // repolarization window around R
  long carry;                         // context columns kept between chunks
  int det_lead = -1;

  std::vector<long> beat_index;
  std::vector<double> rr;          // ms, beat_index.size() - 1 entries
  std::vector<BeatLabel> labels;
  std::vector<char> premature;
  std::vector<size_t> template_candidates;
  Eigen::VectorXd tmpl;
  bool have_template = false;
  double global_median_rr = 0.0;

  // Per-beat repolarization products (sweep 3).
  std::vector<double> qt_ms;                     // NaN when unusable
  std::vector<Eigen::Vector3d> t_vectors;
  std::vector<double> t_vector_times;
  std::vector<int> tvec_leads;

  // Alternans run state.
  std::unique_ptr<MmaTwaAccumulator> twa_acc;
  long twa_run_beats = 0;
  std::vector<double> twa_snapshots;

  // Segment accumulation.
  long seg_index = 0;
  long seg_frames = 0;
  Eigen::MatrixXd seg_sum;
  long seg_beats = 0;
  Eigen::MatrixXd global_sum;
  long global_beats = 0;
  long segments_analyzed = 0;
  std::vector<double> tcrt_vals, twr_vals, tmd_vals, tld_vals;
  std::vector<int> svd_leads;  // I, II, V1..V6 when all present

  Engine(const HolterHeader& h, const AnalyzerConfig& c, ChunkSource& s)
      : header(h), cfg(c), src(s) {
    rate = static_cast<double>(header.sampling_rate_hz);
    if (!(rate >= kMinDetectionRateHz && rate <= kMaxDetectionRateHz))
      throw DataError("sampling rate outside the supported range [128, 2000] Hz");
    total = static_cast<long>(header.sample_count_per_lead);
    leads = static_cast<int>(header.lead_count());
    if (leads < 1) throw DataError("record has no leads");
    span_left = frames_of(350.0);
    span_right = frames_of(700.0);
    span = span_left + span_right;
    carry = frames_of(1100.0) + 2;
    seg_frames = std::max<long>(1, std::lround(cfg.segment_s * rate));
    seg_sum = Eigen::MatrixXd::Zero(leads, span);
    global_sum = Eigen::MatrixXd::Zero(leads, span);

    const int named[3] = {lead_of("I"), lead_of("aVF"), lead_of("V2")};
    if (named[0] >= 0 && named[1] >= 0 && named[2] >= 0)
      tvec_leads = {named[0], named[1], named[2]};
    else
      for (int i = 0; i < std::min(leads, 3); ++i) tvec_leads.push_back(i);

    static const char* kDipole[8] = {"I", "II", "V1", "V2", "V3", "V4", "V5", "V6"};
    bool all = true;
    for (const char* name : kDipole) {
      const int idx = lead_of(name);
      if (idx < 0) {
        all = false;
        break;
      }
      svd_leads.push_back(idx);
    }
    if (!all) svd_leads.clear();
  }

  long frames_of(double ms) const {
    return std::max<long>(1, std::lround(ms * 1e-3 * rate));
  }
  int lead_of(std::string_view name) const {
    for (size_t i = 0; i < header.lead_names.size(); ++i)
      if (header.lead_names[i] == name) return static_cast<int>(i);
    return -1;
  }

  // ---- sweep 1: lead choice and QRS detection ----------------------------

  void sweep_detect() {
    src.rewind();
    Eigen::MatrixXd chunk;
    std::unique_ptr<StreamingQrsDetector> detector;
    Eigen::VectorXd row;
    while (true) {
      const Eigen::Index got = src.read(&chunk, cfg.chunk_frames);
      if (got == 0) break;
      if (!detector) {
        det_lead = lead_of(cfg.detection_lead);
        if (det_lead < 0) {
          // Highest-variance lead of the opening chunk.
          double best = -1.0;
          for (int i = 0; i < leads; ++i) {
            const double var =
                (chunk.row(i).array() - chunk.row(i).mean()).square().sum();
            if (var > best) {
              best = var;
              det_lead = i;
            }
          }
        }
        detector = std::make_unique<StreamingQrsDetector>(rate, cfg.qrs);
      }
      row = chunk.row(det_lead);
      detector->process(row);
    }
    if (detector) {
      detector->finish();
      beat_index = detector->take_beats();
    }
  }

  // ---- beat-sequence precomputation (RR only; no signal access) ----------

  void prepare_rhythm() {
    const size_t n = beat_index.size();
    rr.assign(n > 0 ? n - 1 : 0, 0.0);
    for (size_t k = 0; k + 1 < n; ++k)
      rr[k] = static_cast<double>(beat_index[k + 1] - beat_index[k]) * 1000.0 / rate;
    global_median_rr = median_of(rr);

    labels.assign(n, BeatLabel::normal);
    for (size_t k = 1; k < n; ++k)
      if (rr[k - 1] < 200.0 || rr[k - 1] > 3000.0) labels[k] = BeatLabel::artifact;

    premature.assign(n, 0);
    for (size_t k = 1; k < n; ++k) {
      if (labels[k] == BeatLabel::artifact) continue;
      std::vector<double> local;
      for (long j = static_cast<long>(k) - 6; j <= static_cast<long>(k) + 4; ++j) {
        if (j < 0 || j >= static_cast<long>(rr.size())) continue;
        if (j == static_cast<long>(k) - 1) continue;
        local.push_back(rr[static_cast<size_t>(j)]);
      }
      const double ref = local.empty() ? global_median_rr : median_of(local);
      premature[k] = rr[k - 1] <= 0.8 * ref ? 1 : 0;
    }

    for (size_t k = 1; k + 1 < n; ++k) {
      if (labels[k] != BeatLabel::normal) continue;
      if (std::abs(rr[k - 1] - global_median_rr) > 0.2 * global_median_rr) continue;
      if (std::abs(rr[k] - global_median_rr) > 0.2 * global_median_rr) continue;
      template_candidates.push_back(k);
      if (template_candidates.size() >= 256) break;
    }
  }

  // ---- sweep 2: beat template from the record prefix ----------------------

  void sweep_template() {
    if (template_candidates.empty()) return;
    const long half = std::lround(0.100 * rate);
    const long stop = beat_index[template_candidates.back()] + half + 1;

    src.rewind();
    Eigen::MatrixXd chunk;
    Eigen::VectorXd carry_row = Eigen::VectorXd::Zero(carry);
    long chunk_start = 0;
    size_t next = 0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(2 * half + 1);
    long contributors = 0;

    while (next < template_candidates.size()) {
      const Eigen::Index got = src.read(&chunk, cfg.chunk_frames);
      if (got == 0) break;
      const long chunk_end = chunk_start + got;
      const long base = chunk_start - carry;
      const auto sample = [&](long abs_idx) -> double {
        if (abs_idx < 0 || abs_idx >= total) return 0.0;
        const long rel = abs_idx - base;
        return rel < carry ? carry_row[rel] : chunk(det_lead, rel - carry);
      };
      while (next < template_candidates.size()) {
        const long r = beat_index[template_candidates[next]];
        if (r + half >= chunk_end) break;
        for (long k = -half; k <= half; ++k) sum[k + half] += sample(r + k);
        ++contributors;
        ++next;
      }
      // Keep the last `carry` samples of the detection lead.
      for (long i = 0; i < carry; ++i) {
        const long abs_idx = chunk_end - carry + i;
        carry_row[i] = abs_idx < 0 ? 0.0 : sample(abs_idx);
      }
      chunk_start = chunk_end;
      if (chunk_start >= stop && next >= template_candidates.size()) break;
    }
    have_template = contributors >= 5;
    if (have_template) tmpl = sum / static_cast<double>(contributors);
  }

  // ---- sweep 3: classification and repolarization extraction --------------

  void reset_twa_run() {
    // A qualifying run contributes its alternans estimate when it ends, not
    // just at segment boundaries; rhythms with periodic ectopy never have a
    // live run in hand when the segment closes.
    snapshot_twa();
    twa_acc.reset();
    twa_run_beats = 0;
  }

  void snapshot_twa() {
    if (twa_acc && twa_run_beats >= kMinTwaBeats)
      twa_snapshots.push_back(twa_acc->twa_uv());
  }

  void finalize_segment() {
    snapshot_twa();
    if (seg_beats >= cfg.min_segment_beats) {
      ++segments_analyzed;
      global_sum += seg_sum;
      global_beats += seg_beats;
      if (!svd_leads.empty()) segment_svd(seg_sum / static_cast<double>(seg_beats));
    } else if (seg_beats > 0) {
      global_sum += seg_sum;
      global_beats += seg_beats;
    }
    seg_sum.setZero();
    seg_beats = 0;
    ++seg_index;
  }

  void segment_svd(const Eigen::MatrixXd& mean_beat) {
    BeatWindow bw;
    bw.samples_uv = mean_beat;
    bw.lead_names = header.lead_names;
    bw.rate_hz = rate;
    if (!locate_fiducials(&bw, span_left)) return;
    const long q0 = bw.q_on;
    const long j = bw.j_point;
    const long t0 = std::min(bw.t_end - 1, j + frames_of(40.0));
    const long t1 = bw.t_end;
    if (j <= q0 || t1 <= t0) return;
    Eigen::MatrixXd qrs(8, j - q0 + 1), t(8, t1 - t0 + 1);
    for (int i = 0; i < 8; ++i) {
      qrs.row(i) = mean_beat.row(svd_leads[static_cast<size_t>(i)]).segment(q0, j - q0 + 1);
      t.row(i) = mean_beat.row(svd_leads[static_cast<size_t>(i)]).segment(t0, t1 - t0 + 1);
    }
    try {
      const SvdBattery b = twave_svd_battery(qrs, t);
      if (b.tcrt_valid) tcrt_vals.push_back(b.tcrt);
      if (b.twr_valid) twr_vals.push_back(b.twr);
      if (b.tmd_valid) tmd_vals.push_back(b.tmd_deg);
      if (b.tld_valid) tld_vals.push_back(b.tld);
    } catch (const DataError&) {
      // degenerate segment; skipped
    }
  }

  void sweep_extract() {
    const size_t n = beat_index.size();
    qt_ms.assign(n, kNan);

    src.rewind();
    Eigen::MatrixXd chunk;
    Eigen::MatrixXd buf = Eigen::MatrixXd::Zero(leads, carry + cfg.chunk_frames);
    long chunk_start = 0;
    size_t next = 0;
    const long half_cls = frames_of(160.0);
    const long f60 = frames_of(60.0), f400 = frames_of(400.0);
    const long f20 = frames_of(20.0);

    const auto process_until = [&](long chunk_end, long base) {
      while (next < n) {
        const size_t k = next;
        const long r = beat_index[k];
        if (r + span_right >= chunk_end && chunk_end < total) break;
        while (r >= (seg_index + 1) * seg_frames) finalize_segment();
        process_beat(k, buf, base, half_cls, f60, f400, f20);
        ++next;
      }
    };

    while (true) {
      const Eigen::Index got = src.read(&chunk, cfg.chunk_frames);
      if (got == 0) break;
      buf.middleCols(carry, got) = chunk;
      const long chunk_end = chunk_start + got;
      process_until(chunk_end, chunk_start - carry);
      buf.leftCols(carry) = buf.middleCols(got, carry).eval();
      chunk_start = chunk_end;
    }
    process_until(total, chunk_start - carry);
    while ((seg_index + 1) * seg_frames <= total) finalize_segment();
    if (seg_beats > 0 || (twa_acc && twa_run_beats >= kMinTwaBeats)) finalize_segment();
  }

  // Zero-padded single-lead extraction around a beat; matches the batch
  // helpers' behavior at record edges.
  static Eigen::VectorXd padded(const Eigen::MatrixXd& buf, long base, int lead,
                                long center, long half, long total) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * half + 1);
    for (long k = -half; k <= half; ++k) {
      const long abs_idx = center + k;
      if (abs_idx >= 0 && abs_idx < total) w[k + half] = buf(lead, abs_idx - base);
    }
    return w;
  }

  void process_beat(size_t k, const Eigen::MatrixXd& buf, long base, long half_cls,
                    long f60, long f400, long f20) {
    const size_t n = beat_index.size();
    const long r = beat_index[k];

    if (labels[k] != BeatLabel::artifact && premature[k]) {
      const Eigen::VectorXd w = padded(buf, base, det_lead, r, half_cls, total);
      const bool wide = qrs_width_ms(w, half_cls, rate) > 120.0;
      const bool dissimilar =
          have_template && template_correlation(w, half_cls, tmpl, rate) < 0.9;
      if (wide || dissimilar) labels[k] = BeatLabel::ventricular;
    }

    const bool full_window = r - span_left >= 0 && r + span_right <= total;
    const double rr_prev = k >= 1 ? rr[k - 1] : kNan;
    const double rr_next = k + 1 < n ? rr[k] : kNan;

    if (labels[k] != BeatLabel::normal || !full_window) {
      reset_twa_run();
      return;
    }

    // Alternans stream: consecutive normal beats at 120 bpm or slower.
    if (std::isfinite(rr_prev) && rr_prev >= cfg.min_twa_rr_ms &&
        (!std::isfinite(rr_next) || rr_next >= cfg.min_twa_rr_ms)) {
      if (!twa_acc) twa_acc = std::make_unique<MmaTwaAccumulator>();
      twa_acc->add_beat(buf.row(det_lead).segment(r + f60 - base, f400 - f60).transpose());
      ++twa_run_beats;
    } else {
      reset_twa_run();
    }

    // Segment mean beat.
    seg_sum += buf.middleCols(r - span_left - base, span);
    ++seg_beats;

    // Per-beat fiducials on the detection lead, with the search clipped so a
    // close following beat cannot masquerade as the T wave.
    long cols = span;
    if (std::isfinite(rr_next))
      cols = std::min(cols, span_left + std::lround(0.9 * rr_next * 1e-3 * rate));
    if (cols < span_left + 4) return;
    BeatWindow bw;
    bw.samples_uv = buf.block(det_lead, r - span_left - base, 1, cols);
    bw.rate_hz = rate;
    if (!locate_fiducials(&bw, span_left)) return;

    qt_ms[k] = static_cast<double>(bw.t_end - bw.q_on) * 1000.0 / rate;
    if (static_cast<int>(tvec_leads.size()) == 3) {
      const long lo = std::min(bw.t_end - 1, bw.j_point + f20);
      const long len = bw.t_end - lo + 1;
      Eigen::Vector3d v;
      for (int i = 0; i < 3; ++i)
        v[i] = buf.row(tvec_leads[static_cast<size_t>(i)])
                   .segment(r - span_left + lo - base, len)
                   .mean();
      t_vectors.push_back(v);
      t_vector_times.push_back(static_cast<double>(r) / rate);
    }
  }

  // ---- marker assembly -----------------------------------------------------

  AnalysisResult assemble(const std::string& record_id) {
    AnalysisResult out;
    out.summary.record_id = record_id;
    out.summary.duration_s = header.duration_s();
    out.summary.rate_hz = rate;
    out.summary.lead_count = leads;
    out.summary.detection_lead = det_lead;
    out.summary.beat_count = static_cast<long>(beat_index.size());
    out.summary.segments_analyzed = segments_analyzed;
    for (const BeatLabel l : labels) {
      if (l == BeatLabel::normal) ++out.summary.normal_count;
      else if (l == BeatLabel::ventricular) ++out.summary.ventricular_count;
      else ++out.summary.artifact_count;
    }

    MarkerVector& m = out.markers;
    const auto unit_of = [](std::string_view name) -> std::string {
      for (const MarkerDefinition& d : marker_battery())
        if (name == d.name) return d.unit;
      return "";
    };
    const auto set = [&](std::string_view name, double value, double support,
                         bool valid, std::string note = "") {
      MarkerValue v;
      v.name = std::string(name);
      v.value = valid ? value : kNan;
      v.unit = unit_of(name);
      v.valid = valid;
      v.support = support;
      v.note = std::move(note);
      m.set(std::move(v));
    };

    if (beat_index.size() < 10) {
      fill_battery(&m, "fewer than 10 beats detected");
      return out;
    }

    BeatAnnotations ann;
    ann.indices = beat_index;
    ann.labels = labels;
    fill_nn_series(&ann, rate);
    const double beats = static_cast<double>(beat_index.size());

    const BeatCounts counts = count_markers(labels, ann.rr_ms);
    set("pvc_count", static_cast<double>(counts.pvc_count), beats, true);
    set("nsvt_count", static_cast<double>(counts.nsvt.size()), beats, true);
    if (!counts.nsvt.empty()) {
      double mean_rate = 0.0;
      for (const NsvtEpisode& e : counts.nsvt) mean_rate += e.mean_rate_bpm;
      set("nsvt_mean_rate_bpm", mean_rate / static_cast<double>(counts.nsvt.size()),
          static_cast<double>(counts.nsvt.size()), true);
    } else {
      set("nsvt_mean_rate_bpm", kNan, 0, false, "no episodes");
    }
    set("sustained_vt_count", static_cast<double>(counts.sustained_count), beats, true);

    const double nn_count = static_cast<double>(ann.nn_ms.size());
    try {
      const HrvTimeDomain td = time_domain_hrv(ann.nn_ms);
      set("sdnn_ms", td.sdnn_ms, nn_count, true);
      set("rmssd_ms", td.rmssd_ms, nn_count, true);
    } catch (const DataError& e) {
      set("sdnn_ms", kNan, nn_count, false, e.what());
      set("rmssd_ms", kNan, nn_count, false, e.what());
    }

    try {
      const HrvFrequencyDomain fd =
          frequency_domain_hrv(ann.nn_ms, ann.nn_end_times_s, cfg.spectral);
      const double wsup = static_cast<double>(fd.windows_used);
      set("hrv_vlf_ms2", fd.vlf_ms2, wsup, true);
      set("hrv_lf_ms2", fd.lf_ms2, wsup, true);
      set("hrv_hf_ms2", fd.hf_ms2, wsup, true);
      if (std::isfinite(fd.lf_hf_ratio))
        set("hrv_lf_hf_ratio", fd.lf_hf_ratio, wsup, true);
      else
        set("hrv_lf_hf_ratio", kNan, wsup, false, "zero high-frequency power");
    } catch (const DataError& e) {
      for (const char* name : {"hrv_vlf_ms2", "hrv_lf_ms2", "hrv_hf_ms2", "hrv_lf_hf_ratio"})
        set(name, kNan, 0, false, e.what());
    }

    const std::vector<VpcTachogram> tachs = extract_vpc_tachograms(labels, ann.rr_ms);
    try {
      const TurbulenceResult hrt = heart_rate_turbulence(tachs);
      const double tsup = static_cast<double>(hrt.tachogram_count);
      set("turbulence_onset_percent", hrt.to_percent, tsup, true);
      set("turbulence_slope_ms_per_beat", hrt.ts_ms_per_beat, tsup, true);
    } catch (const DataError& e) {
      set("turbulence_onset_percent", kNan, static_cast<double>(tachs.size()), false, e.what());
      set("turbulence_slope_ms_per_beat", kNan, static_cast<double>(tachs.size()), false, e.what());
    }

    try {
      const PrsaResult pr = prsa(ann.nn_ms, cfg.prsa);
      set("deceleration_capacity_ms", pr.dc_ms, static_cast<double>(pr.anchor_count_dc), true);
      set("acceleration_capacity_ms", pr.ac_ms, static_cast<double>(pr.anchor_count_ac), true);
    } catch (const DataError& e) {
      set("deceleration_capacity_ms", kNan, 0, false, e.what());
      set("acceleration_capacity_ms", kNan, 0, false, e.what());
    }

    if (!twa_snapshots.empty())
      set("twa_uv", *std::max_element(twa_snapshots.begin(), twa_snapshots.end()),
          static_cast<double>(twa_snapshots.size()), true);
    else
      set("twa_uv", kNan, 0, false, "no clean run of 64 slow beats");

    if (static_cast<int>(tvec_leads.size()) == 3) {
      Eigen::Matrix3Xd tv(3, static_cast<Eigen::Index>(t_vectors.size()));
      Eigen::VectorXd tt(static_cast<Eigen::Index>(t_vectors.size()));
      for (size_t i = 0; i < t_vectors.size(); ++i) {
        tv.col(static_cast<Eigen::Index>(i)) = t_vectors[i];
        tt[static_cast<Eigen::Index>(i)] = t_vector_times[i];
      }
      try {
        const PrdResult pr = prd(tv, tt, cfg.prd);
        set("prd_deg2", pr.prd_deg2, static_cast<double>(pr.pairs_used), true);
      } catch (const DataError& e) {
        set("prd_deg2", kNan, static_cast<double>(t_vectors.size()), false, e.what());
      }
    } else {
      set("prd_deg2", kNan, 0, false, "requires at least 3 leads");
    }

    if (const auto stv = stv_over_runs(qt_ms))
      set("stv_qt_ms", stv->first, static_cast<double>(stv->second), true);
    else
      set("stv_qt_ms", kNan, 0, false, "no run of 30 valid QT intervals");

    assemble_morphology(m, set);

    const auto med = [&](const char* name, const std::vector<double>& vals,
                         const char* why) {
      if (!vals.empty())
        set(name, median_of(vals), static_cast<double>(vals.size()), true);
      else
        set(name, kNan, 0, false, why);
    };
    const char* svd_note = svd_leads.empty() ? "requires leads I, II, V1-V6"
                                             : "no analyzable segment";
    med("tcrt", tcrt_vals, svd_note);
    med("twr", twr_vals, svd_note);
    med("tmd_deg", tmd_vals, svd_note);
    med("tld", tld_vals, svd_note);

    fill_battery(&m, "not computed");
    return out;
  }

  template <typename SetFn>
  void assemble_morphology(MarkerVector&, const SetFn& set) {
    const double gsup = static_cast<double>(global_beats);
    if (global_beats < cfg.min_segment_beats) {
      for (const char* name :
           {"tpte_ms", "jpoint_uv", "early_repolarization", "fractionation_index"})
        set(name, kNan, gsup, false, "too few clean beats for a representative beat");
      return;
    }
    BeatWindow bw;
    bw.samples_uv = global_sum / static_cast<double>(global_beats);
    bw.lead_names = header.lead_names;
    bw.rate_hz = rate;
    if (!locate_fiducials(&bw, span_left)) {
      for (const char* name :
           {"tpte_ms", "jpoint_uv", "early_repolarization", "fractionation_index"})
        set(name, kNan, gsup, false, "fiducials not locatable on the representative beat");
      return;
    }
    const IntervalMarkers im = interval_markers(bw);
    if (im.valid) {
      set("tpte_ms", im.tpte_ms, gsup, true);
      set("jpoint_uv", im.jpoint_uv, gsup, true);
      set("early_repolarization", im.early_repol ? 1.0 : 0.0, gsup, true);
    } else {
      for (const char* name : {"tpte_ms", "jpoint_uv", "early_repolarization"})
        set(name, kNan, gsup, false, im.note);
    }
    const Eigen::VectorXd qrs_seg =
        bw.samples_uv.row(det_lead).segment(bw.q_on, bw.j_point - bw.q_on + 1);
    set("fractionation_index", static_cast<double>(fractionation_index(qrs_seg, rate)),
        gsup, true);
  }

  AnalysisResult run(const std::string& record_id) {
    sweep_detect();
    if (beat_index.size() >= 10) {
      prepare_rhythm();
      sweep_template();
      sweep_extract();
    }
    return assemble(record_id);
  }
};

std::string stem_of(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  const size_t start = slash == std::string::npos ? 0 : slash + 1;
  size_t end = path.rfind('.');
  if (end == std::string::npos || end <= start) end = path.size();
  return path.substr(start, end - start);
}

}  // namespace

AnalysisResult analyze_record(const HolterRecord& record, const AnalyzerConfig& config,
                              const std::string& record_id) {
  record.validate();
  MemorySource src(&record);
  Engine engine(record.header, config, src);
  return engine.run(record_id);
}

AnalysisResult analyze_file(const std::string& header_path, const AnalyzerConfig& config,
                            const std::string& data_path) {
  FileSource src(header_path, data_path);
  const HolterHeader header = src.reader->header();
  Engine engine(header, config, src);
  return engine.run(stem_of(header_path));
}

}  // namespace holterisk
