#include "support/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "holterisk/rng.hpp"

namespace testsupport {

using holterisk::HolterHeader;
using holterisk::HolterRecord;

double beat_amplitude_uv(double t_ms, const BeatShape& shape) {
  const double s = shape.qrs_stretch;
  double v = 0.0;
  // QRS: linear rise to R, fall through an S dip, linear recovery. Exactly
  // zero (flat) elsewhere so PQ and ST segments are quiet.
  const double t = t_ms / s;
  if (t >= -20.0 && t < 0.0) {
    v = shape.r_amp_uv * (t + 20.0) / 20.0;
  } else if (t >= 0.0 && t < 20.0) {
    v = shape.r_amp_uv - (shape.r_amp_uv * 1.2) * t / 20.0;  // down to -0.2 R
  } else if (t >= 20.0 && t < 35.0) {
    v = -0.2 * shape.r_amp_uv * (35.0 - t) / 15.0;
  }
  if (shape.invert_qrs) v = -v;
  // T wave: raised cosine on [170, 330] ms (unscaled by the QRS stretch).
  if (t_ms >= 170.0 && t_ms <= 330.0) {
    v += 0.5 * shape.t_amp_uv *
         (1.0 - std::cos(2.0 * std::numbers::pi * (t_ms - 170.0) / 160.0));
  }
  return v;
}

namespace {

// Support of the waveform in ms around R, covering the widest QRS stretch.
double support_left_ms(const BeatShape& shape) { return 20.0 * shape.qrs_stretch; }
double support_right_ms(const BeatShape& shape) {
  return std::max(35.0 * shape.qrs_stretch, 330.0);
}

const BeatShape& shape_for(const std::vector<BeatShape>& shapes, size_t beat) {
  static const BeatShape kDefault;
  if (shapes.empty()) return kDefault;
  if (shapes.size() == 1) return shapes[0];
  return shapes.at(beat);
}

}  // namespace

EcgSignal render_ecg(const std::vector<double>& rr_ms, double rate_hz,
                     const std::vector<BeatShape>& shapes, double lead_in_ms,
                     double tail_ms) {
  const size_t n_beats = rr_ms.size() + 1;
  if (!shapes.empty() && shapes.size() != 1 && shapes.size() != n_beats)
    throw std::invalid_argument("render_ecg: shape count mismatch");

  std::vector<double> r_times_ms(n_beats);
  r_times_ms[0] = lead_in_ms;
  for (size_t k = 0; k < rr_ms.size(); ++k) r_times_ms[k + 1] = r_times_ms[k] + rr_ms[k];

  const double total_ms = r_times_ms.back() + tail_ms;
  const long n_samples = static_cast<long>(std::llround(total_ms * 1e-3 * rate_hz));

  EcgSignal out;
  out.samples_uv = Eigen::VectorXd::Zero(n_samples);
  out.r_positions.resize(n_beats);
  for (size_t b = 0; b < n_beats; ++b) {
    const BeatShape& shape = shape_for(shapes, b);
    const double r_ms = r_times_ms[b];
    out.r_positions[b] = std::lround(r_ms * 1e-3 * rate_hz);
    const long lo = std::max<long>(
        0, static_cast<long>(std::floor((r_ms - support_left_ms(shape)) * 1e-3 * rate_hz)));
    const long hi = std::min<long>(
        n_samples - 1,
        static_cast<long>(std::ceil((r_ms + support_right_ms(shape)) * 1e-3 * rate_hz)));
    for (long i = lo; i <= hi; ++i) {
      const double t_ms = static_cast<double>(i) * 1000.0 / rate_hz - r_ms;
      out.samples_uv[i] += beat_amplitude_uv(t_ms, shape);
    }
  }
  return out;
}

HolterRecord render_record(const std::vector<double>& rr_ms, double rate_hz,
                           const std::vector<double>& lead_scales,
                           const std::vector<BeatShape>& shapes, double lead_in_ms,
                           double tail_ms) {
  const EcgSignal base = render_ecg(rr_ms, rate_hz, shapes, lead_in_ms, tail_ms);
  HolterRecord rec;
  rec.header.sampling_rate_hz = static_cast<int>(rate_hz);
  rec.header.resolution_uv = 1.0;
  rec.header.sample_count_per_lead = static_cast<std::uint64_t>(base.samples_uv.size());
  for (size_t i = 0; i < lead_scales.size(); ++i)
    rec.header.lead_names.push_back(holterisk::kStandardLeadNames[i % 12]);
  rec.samples_uv.resize(static_cast<Eigen::Index>(lead_scales.size()), base.samples_uv.size());
  for (size_t i = 0; i < lead_scales.size(); ++i)
    rec.samples_uv.row(static_cast<Eigen::Index>(i)) = lead_scales[i] * base.samples_uv.transpose();
  return rec;
}

std::vector<double> constant_rr(long n_beats, double rr_ms) {
  return std::vector<double>(static_cast<size_t>(n_beats - 1), rr_ms);
}

ModulatedNn modulated_nn(long n, double base_ms, double amp_ms, double freq_hz) {
  ModulatedNn out;
  out.nn_ms.resize(n);
  out.end_times_s.resize(n);
  double t_s = 0.0;
  for (long i = 0; i < n; ++i) {
    const double nn = base_ms + amp_ms * std::sin(2.0 * std::numbers::pi * freq_hz * t_s);
    t_s += nn * 1e-3;
    out.nn_ms[i] = nn;
    out.end_times_s[i] = t_s;
  }
  return out;
}

long write_long_record(const std::string& header_path, double duration_s, double rate_hz,
                       double mean_rr_ms, long vpc_every, double t_alternans_uv) {
  // Beat schedule first (small); ventricular beats arrive early and are
  // followed by a compensatory pause, the sinus rhythm wobbles slowly.
  struct Entry {
    double r_ms;
    BeatShape shape;
  };
  std::vector<Entry> schedule;
  double t_ms = 700.0;
  long k = 0;
  while (t_ms < duration_s * 1000.0 - 900.0) {
    BeatShape shape;
    bool vpc = vpc_every > 0 && k > 10 && (k % vpc_every) == 0;
    if (vpc) {
      shape.qrs_stretch = 4.0;
      shape.t_amp_uv = 150.0;
    } else if (t_alternans_uv > 0.0) {
      shape.t_amp_uv = 300.0 + ((k % 2 == 0) ? t_alternans_uv : -t_alternans_uv);
    }
    schedule.push_back({t_ms, shape});
    const double phase = t_ms * 1e-3;
    double rr = mean_rr_ms * (1.0 + 0.04 * std::sin(2.0 * std::numbers::pi * 0.095 * phase) +
                              0.03 * std::sin(2.0 * std::numbers::pi * 0.24 * phase));
    if (vpc) {
      rr = 1.35 * mean_rr_ms;  // compensatory pause after the early beat
    } else if (vpc_every > 0 && k + 1 > 10 && ((k + 1) % vpc_every) == 0) {
      rr = 0.70 * mean_rr_ms;  // coupling interval into the ventricular beat
    }
    t_ms += rr;
    ++k;
  }

  HolterHeader header;
  header.lead_names.assign(holterisk::kStandardLeadNames.begin(),
                           holterisk::kStandardLeadNames.end());
  header.sampling_rate_hz = static_cast<int>(rate_hz);
  header.resolution_uv = 1.0;
  header.sample_count_per_lead = static_cast<std::uint64_t>(duration_s * rate_hz);
  header.start_time = "2020-03-01T08:00:00";

  // Lead gains: detection lead II carries the full waveform.
  const double gains[12] = {0.6, 1.0, 0.5, -0.7, 0.3, 0.55,
                            0.4, 0.8, 0.9, 0.95, 0.85, 0.7};

  holterisk::HolterFileWriter writer(header_path, header);
  const Eigen::Index chunk = 1 << 16;
  const long total = static_cast<long>(header.sample_count_per_lead);
  Eigen::VectorXd base(chunk);
  Eigen::MatrixXd block(12, chunk);
  size_t first_beat = 0;
  for (long start = 0; start < total; start += chunk) {
    const Eigen::Index got = std::min<Eigen::Index>(chunk, total - start);
    base.head(got).setZero();
    const double chunk_lo_ms = static_cast<double>(start) * 1000.0 / rate_hz;
    const double chunk_hi_ms = static_cast<double>(start + got) * 1000.0 / rate_hz;
    while (first_beat < schedule.size() &&
           schedule[first_beat].r_ms + support_right_ms(schedule[first_beat].shape) + 2.0 <
               chunk_lo_ms)
      ++first_beat;
    for (size_t b = first_beat; b < schedule.size(); ++b) {
      const Entry& e = schedule[b];
      if (e.r_ms - support_left_ms(e.shape) - 2.0 > chunk_hi_ms) break;
      const long lo = std::max<long>(
          start,
          static_cast<long>(std::floor((e.r_ms - support_left_ms(e.shape)) * 1e-3 * rate_hz)));
      const long hi = std::min<long>(
          start + got - 1,
          static_cast<long>(std::ceil((e.r_ms + support_right_ms(e.shape)) * 1e-3 * rate_hz)));
      for (long i = lo; i <= hi; ++i) {
        const double rel_ms = static_cast<double>(i) * 1000.0 / rate_hz - e.r_ms;
        base[i - start] += beat_amplitude_uv(rel_ms, e.shape);
      }
    }
    for (int lead = 0; lead < 12; ++lead)
      block.row(lead).head(got) = gains[lead] * base.head(got).transpose();
    writer.write_chunk(block.leftCols(got));
  }
  writer.finish();
  return static_cast<long>(schedule.size());
}

std::string cohort_csv(const std::vector<CohortRow>& rows) {
  std::string out =
      "id,age_years,sex,etiology,lvef_percent,nyha,af,diabetes,creatinine_mg_dl,"
      "bnp_pg_ml,group,prior_device,crt_indicated,secondary_prophylaxis,unstable,"
      "av_block,life_expectancy_le_1y,time_years,terminal_event,"
      "first_appropriate_shock_years,first_inappropriate_shock_years,crossover_years\n";
  const char* roman[] = {"", "I", "II", "III", "IV"};
  for (const CohortRow& r : rows) {
    out += r.id + ',' + std::to_string(r.age) + ',' + r.sex + ',' + r.etiology + ',' +
           std::to_string(r.lvef) + ',' + roman[r.nyha] + ',' + std::to_string(r.af) + ',' +
           std::to_string(r.diabetes) + ',' + r.creatinine + ',' + r.bnp + ',' + r.group +
           ',' + std::to_string(r.prior_device) + ',' + std::to_string(r.crt_indicated) +
           ',' + std::to_string(r.secondary_prophylaxis) + ',' + std::to_string(r.unstable) +
           ',' + std::to_string(r.av_block) + ',' + std::to_string(r.life_expectancy_le_1y) +
           ',' + std::to_string(r.followup_years) + ',' + r.terminal_event + ',' +
           r.first_appropriate_shock_years + ',' + r.first_inappropriate_shock_years + ',' +
           r.crossover_years + '\n';
  }
  return out;
}

}  // namespace testsupport
