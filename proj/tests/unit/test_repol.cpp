#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "holterisk/errors.hpp"
#include "holterisk/repol.hpp"
#include "holterisk/rng.hpp"
#include "support/synthetic.hpp"

using namespace holterisk;
using testsupport::BeatShape;

namespace {

// A 12-lead beat window sampled at 1 kHz with the R peak at r_off.
BeatWindow make_beat(double rate_hz = 1000.0, long r_off = 400, long n = 1100,
                     const BeatShape& shape = {}) {
  BeatWindow b;
  b.rate_hz = rate_hz;
  b.lead_names = {"I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};
  const double gains[12] = {0.6, 1.0, 0.5, -0.7, 0.3, 0.55, 0.4, 0.8, 0.9, 0.95, 0.85, 0.7};
  b.samples_uv.resize(12, n);
  for (long l = 0; l < 12; ++l)
    for (long s = 0; s < n; ++s) {
      const double t_ms = double(s - r_off) * 1000.0 / rate_hz;
      b.samples_uv(l, s) = gains[l] * testsupport::beat_amplitude_uv(t_ms, shape);
    }
  return b;
}

// Raised cosine peaking at exactly apex_uv (odd n puts the crest on a sample).
Eigen::VectorXd jt_segment(double apex_uv, int n = 161) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = apex_uv * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(n - 1)));
  return v;
}

}  // namespace

TEST_CASE("fiducials are located in physiologic order") {
  BeatWindow b = make_beat();
  REQUIRE(locate_fiducials(&b, 400));
  b.validate_fiducials();
  CHECK(b.q_on < 400);
  CHECK(b.q_on > 400 - 60);        // QRS onset lies just before R
  CHECK(b.j_point > 400 + 20);     // past the S recovery
  CHECK(b.j_point < 400 + 90);
  CHECK(std::abs(b.t_peak - (400 + 250)) <= 15);  // T apex near 250 ms
  CHECK(b.t_end > b.t_peak);
  CHECK(std::abs(b.t_end - (400 + 330)) <= 25);   // tangent lands near T offset
}

TEST_CASE("fiducial search fails gracefully on flat data") {
  BeatWindow b;
  b.rate_hz = 1000.0;
  b.lead_names = {"II"};
  b.samples_uv = Eigen::MatrixXd::Zero(1, 800);
  CHECK_FALSE(locate_fiducials(&b, 400));
}

TEST_CASE("fiducial validation rejects inverted orderings") {
  BeatWindow b = make_beat();
  REQUIRE(locate_fiducials(&b, 400));
  b.t_end = b.t_peak;  // violate t_peak < t_end
  CHECK_THROWS_AS(b.validate_fiducials(), DataError);
}

TEST_CASE("MMA alternans reports a constant even/odd split exactly") {
  MmaTwaAccumulator acc;
  for (int k = 0; k < 128; ++k) acc.add_beat(jt_segment(300.0 + ((k % 2) ? 25.0 : -25.0)));
  CHECK(acc.beats() == 128);
  CHECK(acc.twa_uv() == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("MMA alternans converges under noise within ten percent") {
  SplitRng rng(5);
  std::vector<Eigen::VectorXd> segments;
  for (int k = 0; k < 128; ++k) {
    Eigen::VectorXd seg = jt_segment(300.0 + ((k % 2) ? 25.0 : -25.0));
    for (Eigen::Index i = 0; i < seg.size(); ++i) seg[i] += 5.0 * rng.normal();
    segments.push_back(seg);
  }
  const double twa = mma_twa(segments);
  CHECK(twa == doctest::Approx(50.0).epsilon(0.10));
}

TEST_CASE("MMA updates are capped against transients") {
  MmaTwaAccumulator acc;
  for (int k = 0; k < 64; ++k) acc.add_beat(jt_segment(300.0));
  // A single huge artifact beat moves the stream by at most the cap (32 uV).
  acc.add_beat(jt_segment(40000.0));
  CHECK(acc.twa_uv() <= 32.0 + 1e-9);
}

TEST_CASE("alternans requires 64 beats") {
  std::vector<Eigen::VectorXd> segments(63, jt_segment(300.0));
  CHECK_THROWS_AS(mma_twa(segments), DataError);
}

TEST_CASE("QT variability hand values") {
  Eigen::VectorXd alternating(30);
  for (int i = 0; i < 30; ++i) alternating[i] = (i % 2) ? 410.0 : 400.0;
  CHECK(stv_qt(alternating) ==
        doctest::Approx(290.0 / (30.0 * std::numbers::sqrt2)).epsilon(1e-12));

  Eigen::VectorXd outlier = Eigen::VectorXd::Constant(30, 400.0);
  outlier[15] = 500.0;
  CHECK(stv_qt(outlier) == doctest::Approx(200.0 / (30.0 * std::numbers::sqrt2)).epsilon(1e-12));

  CHECK_THROWS_AS(stv_qt(Eigen::VectorXd::Constant(29, 400.0)), DataError);
}

TEST_CASE("QT variability uses the median across sliding windows") {
  // 60 intervals: first window noisy, later windows quiet; the median over
  // 31 windows sits at the quiet level.
  Eigen::VectorXd qt(60);
  for (int i = 0; i < 60; ++i) qt[i] = 400.0 + ((i < 10 && i % 2) ? 40.0 : 0.0);
  const double all = stv_qt(qt);
  const double quiet = stv_qt(Eigen::VectorXd::Constant(30, 400.0));
  CHECK(all == doctest::Approx(quiet).epsilon(1e-12));
}

TEST_CASE("interval markers measure T-peak-to-T-end on the reference lead") {
  BeatWindow b = make_beat();
  REQUIRE(locate_fiducials(&b, 400));
  const IntervalMarkers m = interval_markers(b);
  CHECK(m.valid);
  CHECK(m.tpte_ms == doctest::Approx(double(b.t_end - b.t_peak)).epsilon(1e-12));
  CHECK_FALSE(m.early_repol);  // flat ST segment: no J elevation
  CHECK(std::abs(m.jpoint_uv) < 30.0);
}

TEST_CASE("early repolarization needs J elevation in two adjacent leads") {
  BeatWindow b = make_beat();
  REQUIRE(locate_fiducials(&b, 400));
  // Raise the ST segment on II and III (adjacent inferior pair).
  for (const char* lead : {"II", "III"}) {
    for (size_t l = 0; l < b.lead_names.size(); ++l)
      if (b.lead_names[l] == lead)
        for (long s = b.j_point; s < b.j_point + 40; ++s)
          b.samples_uv(long(l), s) += 140.0;
  }
  const IntervalMarkers m = interval_markers(b);
  CHECK(m.valid);
  CHECK(m.jpoint_uv >= 100.0);
  CHECK(m.early_repol);
}

TEST_CASE("J elevation in non-adjacent leads does not flag early repolarization") {
  BeatWindow b = make_beat();
  REQUIRE(locate_fiducials(&b, 400));
  for (const char* lead : {"III", "V4"}) {  // inferior + lateral, not an adjacent pair
    for (size_t l = 0; l < b.lead_names.size(); ++l)
      if (b.lead_names[l] == lead)
        for (long s = b.j_point; s < b.j_point + 40; ++s)
          b.samples_uv(long(l), s) += 140.0;
  }
  const IntervalMarkers m = interval_markers(b);
  CHECK(m.valid);
  CHECK_FALSE(m.early_repol);
}

TEST_CASE("an unstable baseline invalidates interval markers") {
  BeatWindow b = make_beat();
  REQUIRE(locate_fiducials(&b, 400));
  // Wobble the PQ segment of the reference lead.
  SplitRng rng(9);
  for (long s = 0; s < b.q_on; ++s) b.samples_uv(1, s) += 80.0 * rng.normal();
  const IntervalMarkers m = interval_markers(b);
  CHECK_FALSE(m.valid);
  CHECK(m.note.find("baseline") != std::string::npos);
}

TEST_CASE("fractionation counts extra deflections") {
  BeatWindow clean = make_beat();
  REQUIRE(locate_fiducials(&clean, 400));
  const Eigen::VectorXd qrs =
      clean.samples_uv.row(1).segment(clean.q_on, clean.j_point - clean.q_on);
  const int base = fractionation_index(qrs, 1000.0);
  CHECK(base >= 2);  // rise and fall of the R wave
  CHECK(base <= 4);

  // Carve two notches into the R downstroke: more monotone runs.
  Eigen::VectorXd notched = qrs;
  const Eigen::Index peak_at = [&] {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < notched.size(); ++i)
      if (notched[i] > notched[best]) best = i;
    return best;
  }();
  for (Eigen::Index o : {5, 6, 7}) notched[peak_at + o] -= 350.0;
  for (Eigen::Index o : {14, 15, 16}) notched[peak_at + o] -= 350.0;
  const int frag = fractionation_index(notched, 1000.0);
  CHECK(frag >= base + 2);
}

TEST_CASE("small wiggles below five percent of the QRS range are ignored") {
  Eigen::VectorXd tri(100);
  for (int i = 0; i < 50; ++i) tri[i] = 20.0 * i;          // up to 1000
  for (int i = 50; i < 100; ++i) tri[i] = 20.0 * (99 - i); // back down
  Eigen::VectorXd wiggled = tri;
  for (int i = 10; i < 90; i += 7) wiggled[i] += 30.0;  // 3% of the range
  CHECK(fractionation_index(wiggled, 1000.0) == fractionation_index(tri, 1000.0));
}

TEST_CASE("aligned rank-one loops give TCRT 1 and TWR 0") {
  Eigen::VectorXd s(8);
  s << 1.0, 0.9, 0.5, 0.8, 0.7, 0.75, 0.6, 0.95;  // shared lead gains
  Eigen::VectorXd wq(60), wt(120);
  for (int i = 0; i < 60; ++i) wq[i] = std::sin(std::numbers::pi * i / 59.0);
  for (int i = 0; i < 120; ++i) wt[i] = std::sin(std::numbers::pi * i / 119.0);
  const Eigen::MatrixXd qrs = 900.0 * s * wq.transpose();
  const Eigen::MatrixXd t = 350.0 * s * wt.transpose();
  const SvdBattery b = twave_svd_battery(qrs, t);
  CHECK(b.tcrt_valid);
  CHECK(b.tcrt == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b.twr_valid);
  CHECK(b.twr == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.tmd_valid);
  CHECK(b.tmd_deg == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("opposed loops give TCRT -1") {
  Eigen::VectorXd s(8);
  s << 1.0, 0.9, 0.5, 0.8, 0.7, 0.75, 0.6, 0.95;
  Eigen::VectorXd wq(60), wt(120);
  for (int i = 0; i < 60; ++i) wq[i] = std::sin(std::numbers::pi * i / 59.0);
  for (int i = 0; i < 120; ++i) wt[i] = std::sin(std::numbers::pi * i / 119.0);
  const Eigen::MatrixXd qrs = -900.0 * s * wq.transpose();
  const Eigen::MatrixXd t = 350.0 * s * wt.transpose();
  const SvdBattery b = twave_svd_battery(qrs, t);
  CHECK(b.tcrt_valid);
  CHECK(b.tcrt == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("rank-three T signals have zero wave residuum") {
  SplitRng rng(21);
  Eigen::MatrixXd basis(8, 3), coeffs(3, 90);
  for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs.data()[i] = rng.normal();
  const Eigen::MatrixXd t = 100.0 * basis * coeffs;  // rank 3 by construction
  const Eigen::MatrixXd qrs = 500.0 * basis.col(0) * coeffs.row(0);
  const SvdBattery b = twave_svd_battery(qrs, t);
  CHECK(b.twr_valid);
  CHECK(b.twr == doctest::Approx(0.0).epsilon(1e-9));

  // Full-rank noise has a strictly positive residuum.
  Eigen::MatrixXd noise(8, 90);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = 50.0 * rng.normal();
  const SvdBattery nb = twave_svd_battery(qrs, noise);
  CHECK(nb.twr > 1e-4);
}

TEST_CASE("the SVD battery is invariant under global positive scaling") {
  SplitRng rng(33);
  Eigen::MatrixXd qrs(8, 70), t(8, 110);
  for (Eigen::Index i = 0; i < qrs.size(); ++i) qrs.data()[i] = 200.0 * rng.normal();
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = 80.0 * rng.normal();
  const SvdBattery a = twave_svd_battery(qrs, t);
  const SvdBattery b = twave_svd_battery(8.0 * qrs, 8.0 * t);
  CHECK(a.tcrt == doctest::Approx(b.tcrt).epsilon(1e-9));
  CHECK(a.twr == doctest::Approx(b.twr).epsilon(1e-9));
  CHECK(a.tmd_deg == doctest::Approx(b.tmd_deg).epsilon(1e-9));
  CHECK(a.tld == doctest::Approx(b.tld).epsilon(1e-9));
}

TEST_CASE("an all-zero T segment invalidates the T measures") {
  Eigen::MatrixXd qrs = Eigen::MatrixXd::Random(8, 60) * 300.0;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(8, 100);
  const SvdBattery b = twave_svd_battery(qrs, t);
  CHECK_FALSE(b.twr_valid);
  CHECK_FALSE(b.tmd_valid);
  CHECK_FALSE(b.note.empty());
}

TEST_CASE("periodic repolarization dynamics scales quadratically") {
  // T vectors rotate with oscillating angular rate; doubling the oscillation
  // amplitude quadruples the low-frequency power.
  auto make_vectors = [](double osc_deg) {
    const int n = 700;
    Eigen::Matrix3Xd v(3, n);
    Eigen::VectorXd times(n);
    double phi = 0.0;
    for (int i = 0; i < n; ++i) {
      times[i] = double(i);  // one per second
      v.col(i) = 400.0 * Eigen::Vector3d(std::cos(phi), std::sin(phi), 0.0);
      const double rate_deg =
          2.0 + osc_deg * std::sin(2.0 * std::numbers::pi * 0.05 * double(i));
      phi += rate_deg * std::numbers::pi / 180.0;
    }
    return std::make_pair(v, times);
  };
  const auto [v1, t1] = make_vectors(1.0);
  const auto [v2, t2] = make_vectors(2.0);
  const PrdResult r1 = prd(v1, t1);
  const PrdResult r2 = prd(v2, t2);
  REQUIRE(r1.prd_deg2 > 0.0);
  CHECK(r2.prd_deg2 / r1.prd_deg2 == doctest::Approx(4.0).epsilon(0.10));
}

TEST_CASE("degenerate T vectors are excluded and eventually fatal") {
  const int n = 700;
  Eigen::Matrix3Xd v = Eigen::Matrix3Xd::Zero(3, n);
  Eigen::VectorXd times(n);
  for (int i = 0; i < n; ++i) {
    times[i] = double(i);
    v.col(i) = Eigen::Vector3d(300.0, 100.0 * std::sin(0.3 * i), 0.0);
  }
  v.col(333).setZero();  // one degenerate vector: two excluded pairs
  const PrdResult ok = prd(v, times);
  CHECK(ok.pairs_excluded == 2);

  for (int i = 200; i < 500; ++i) v.col(i).setZero();  // > 25% excluded
  CHECK_THROWS_AS(prd(v, times), DataError);
}

TEST_CASE("PRD needs ten minutes of T vectors") {
  const int n = 400;
  Eigen::Matrix3Xd v(3, n);
  Eigen::VectorXd times(n);
  for (int i = 0; i < n; ++i) {
    times[i] = double(i);  // only ~400 s
    v.col(i) = Eigen::Vector3d(300.0, 10.0 * std::sin(0.2 * i), 5.0);
  }
  CHECK_THROWS_AS(prd(v, times), DataError);
}
