#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "holterisk/cohort.hpp"
#include "holterisk/errors.hpp"
#include "holterisk/risk.hpp"
#include "holterisk/rng.hpp"
#include "support/synthetic.hpp"

using namespace holterisk;

namespace {

Patient baseline_patient() {
  Patient p;
  p.id = "P1";
  p.age_years = 60;
  p.lvef_percent = 30;
  p.nyha = Nyha::II;
  p.bnp_pg_ml = 200.0;
  p.creatinine_mg_dl = 1.0;
  return p;
}

}  // namespace

TEST_CASE("an all-zero weight vector scores the intercept") {
  ScoreWeights w;
  w.intercept = 0.0;
  w.terms["age_years"] = {0.0, "years"};
  w.terms["lvef_percent"] = {0.0, "%"};
  CHECK(compute_score(baseline_patient(), nullptr, w) == 0.0);
  w.intercept = 2.5;
  CHECK(compute_score(baseline_patient(), nullptr, w) == doctest::Approx(2.5));
}

TEST_CASE("a single age term scales linearly") {
  ScoreWeights w;
  w.terms["age_years"] = {0.05, "years"};
  Patient p = baseline_patient();
  p.age_years = 60;
  CHECK(compute_score(p, nullptr, w) == doctest::Approx(3.0));
  p.age_years = 70;
  CHECK(compute_score(p, nullptr, w) == doctest::Approx(3.5));
}

TEST_CASE("missing terms follow the policy") {
  ScoreWeights w;
  w.terms["age_years"] = {0.05, "years"};
  w.terms["bnp_pg_ml"] = {0.001, "pg/ml"};
  Patient p = baseline_patient();
  p.bnp_pg_ml.reset();

  std::vector<std::string> warnings;
  const double s = compute_score(p, nullptr, w, MissingPolicy::skip_with_warning, &warnings);
  CHECK(s == doctest::Approx(3.0));  // BNP term dropped
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("bnp_pg_ml") != std::string::npos);

  CHECK_THROWS_AS(compute_score(p, nullptr, w, MissingPolicy::reject), DataError);
}

TEST_CASE("marker terms resolve against the battery") {
  ScoreWeights w;
  w.terms["sdnn"] = {-0.01, "ms"};
  MarkerVector markers;
  markers.set({"sdnn", 120.0, "ms", true, 1000.0, ""});
  const double s = compute_score(baseline_patient(), &markers, w);
  CHECK(s == doctest::Approx(-1.2));

  // An invalid marker counts as missing.
  markers.set({"sdnn", 120.0, "ms", false, 0.0, "broken"});
  std::vector<std::string> warnings;
  CHECK(compute_score(baseline_patient(), &markers, w, MissingPolicy::skip_with_warning,
                      &warnings) == 0.0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("non-finite weights are rejected up front") {
  ScoreWeights w;
  w.terms["age_years"] = {std::numeric_limits<double>::quiet_NaN(), "years"};
  CHECK_THROWS_AS(w.validate(), DataError);
}

TEST_CASE("weights round trip through JSON") {
  ScoreWeights w;
  w.intercept = -1.25;
  w.provenance = "unit test";
  w.terms["age_years"] = {0.05, "years"};
  w.terms["sdnn"] = {-0.011, "ms"};
  const ScoreWeights back = load_weights_json(write_weights_json(w));
  CHECK(back.intercept == doctest::Approx(-1.25));
  CHECK(back.terms.at("age_years").coefficient == doctest::Approx(0.05));
  CHECK(back.terms.at("sdnn").unit == "ms");
  CHECK(back.provenance == "unit test");
}

TEST_CASE("built-in weights validate and differ by endpoint") {
  const ScoreWeights mort = default_mortality_weights();
  const ScoreWeights shock = default_shock_weights();
  mort.validate();
  shock.validate();
  CHECK_FALSE(mort.provenance.empty());
  std::vector<std::string> mort_keys, shock_keys;
  for (const auto& [k, v] : mort.terms) mort_keys.push_back(k);
  for (const auto& [k, v] : shock.terms) shock_keys.push_back(k);
  CHECK(mort_keys != shock_keys);
}

TEST_CASE("quintile categorization splits 40/40/20") {
  Eigen::VectorXd scores(10);
  for (int i = 0; i < 10; ++i) scores[i] = double(i + 1);
  const Categorization c = categorize(scores);
  long low = 0, mid = 0, high = 0;
  for (RiskCategory cat : c.categories) {
    if (cat == RiskCategory::low) ++low;
    if (cat == RiskCategory::intermediate) ++mid;
    if (cat == RiskCategory::high) ++high;
  }
  CHECK(low == 4);
  CHECK(mid == 4);
  CHECK(high == 2);
  CHECK(c.cut_low_max == doctest::Approx(4.0));
  CHECK(c.cut_int_max == doctest::Approx(8.0));
  CHECK_FALSE(c.degenerate);
  CHECK(c.classify(3.0) == RiskCategory::low);
  CHECK(c.classify(7.2) == RiskCategory::intermediate);
  CHECK(c.classify(9.1) == RiskCategory::high);
}

TEST_CASE("categorization counts at n = 672") {
  SplitRng rng(11);
  Eigen::VectorXd scores(672);
  for (Eigen::Index i = 0; i < scores.size(); ++i) scores[i] = rng.normal();
  const Categorization c = categorize(scores);
  long counts[3] = {0, 0, 0};
  for (RiskCategory cat : c.categories) ++counts[int(cat)];
  CHECK(std::abs(counts[0] - 269) <= 1);
  CHECK(std::abs(counts[1] - 269) <= 1);
  CHECK(std::abs(counts[2] - 134) <= 1);
  CHECK(counts[0] + counts[1] + counts[2] == 672);
}

TEST_CASE("categorization is invariant under monotone transforms") {
  SplitRng rng(13);
  Eigen::VectorXd scores(101);
  for (Eigen::Index i = 0; i < scores.size(); ++i) scores[i] = rng.normal();
  const Categorization a = categorize(scores);
  Eigen::VectorXd mapped = scores.array().exp();
  const Categorization b = categorize(mapped);
  CHECK(a.categories == b.categories);
}

TEST_CASE("all-equal scores degenerate to low risk with a warning") {
  const Categorization c = categorize(Eigen::VectorXd::Constant(25, 3.25));
  CHECK(c.degenerate);
  REQUIRE_FALSE(c.warnings.empty());
  for (RiskCategory cat : c.categories) CHECK(cat == RiskCategory::low);
}

TEST_CASE("annualized rate per hundred person-years") {
  CHECK(annualized_rate(5, 100) == doctest::Approx(5.0));
  CHECK(annualized_rate(0, 50) == 0.0);
  CHECK_THROWS_AS(annualized_rate(1, 0), DataError);
}

TEST_CASE("benefit grid on a hand-built cohort") {
  using testsupport::CohortRow;
  std::vector<CohortRow> rows(4);
  for (int i = 0; i < 4; ++i) rows[i].id = "P" + std::to_string(i);
  rows[0].followup_years = 2.0;
  rows[1].followup_years = 4.0;
  rows[1].terminal_event = "scd";
  rows[2].followup_years = 3.0;
  rows[2].first_appropriate_shock_years = "1.0";
  rows[3].followup_years = 1.0;
  const CohortTable cohort = load_cohort(testsupport::cohort_csv(rows));

  std::vector<RiskProfile> profiles(4);
  for (int i = 0; i < 4; ++i) profiles[size_t(i)].id = "P" + std::to_string(i);
  profiles[0] = {"P0", 0, 0, RiskCategory::low, RiskCategory::low};
  profiles[1] = {"P1", 0, 0, RiskCategory::low, RiskCategory::low};
  profiles[2] = {"P2", 0, 0, RiskCategory::high, RiskCategory::intermediate};
  profiles[3] = {"P3", 0, 0, RiskCategory::intermediate, RiskCategory::high};

  const BenefitGrid grid = benefit_grid(profiles, cohort);
  CHECK(grid.total_count == 4);
  CHECK(grid.total_person_years == doctest::Approx(10.0));

  const BenefitCell& ll = grid.cells[0][0];
  CHECK(ll.count == 2);
  CHECK(ll.person_years == doctest::Approx(6.0));
  CHECK(ll.deaths == 1);
  CHECK(ll.mortality_rate_pct_per_year == doctest::Approx(100.0 / 6.0));

  const BenefitCell& hi = grid.cells[2][1];
  CHECK(hi.count == 1);
  CHECK(hi.shocks == 1);
  CHECK(hi.person_years == doctest::Approx(3.0));
  // Shock person-years stop at the first appropriate shock.
  CHECK(hi.shock_person_years == doctest::Approx(1.0));
  CHECK(hi.shock_rate_pct_per_year == doctest::Approx(100.0));
}

TEST_CASE("benefit grid conserves counts and person-years") {
  SplitRng rng(17);
  using testsupport::CohortRow;
  std::vector<CohortRow> rows(60);
  std::vector<RiskProfile> profiles(60);
  for (int i = 0; i < 60; ++i) {
    rows[size_t(i)].id = "Q" + std::to_string(i);
    rows[size_t(i)].followup_years = 0.5 + 5.0 * rng.uniform();
    if (rng.bernoulli(0.3)) rows[size_t(i)].terminal_event = "cardiac_death";
    profiles[size_t(i)].id = rows[size_t(i)].id;
    profiles[size_t(i)].mortality_cat = RiskCategory(int(rng.uniform_int(3)));
    profiles[size_t(i)].shock_cat = RiskCategory(int(rng.uniform_int(3)));
  }
  const CohortTable cohort = load_cohort(testsupport::cohort_csv(rows));
  const BenefitGrid grid = benefit_grid(profiles, cohort);

  long count = 0, deaths = 0;
  double py = 0.0;
  for (const auto& row : grid.cells)
    for (const BenefitCell& cell : row) {
      count += cell.count;
      deaths += cell.deaths;
      py += cell.person_years;
    }
  CHECK(count == 60);
  CHECK(grid.total_count == 60);
  double expected_py = 0.0;
  for (const auto& fu : cohort.followups) expected_py += fu.time_years;
  CHECK(py == doctest::Approx(expected_py).epsilon(1e-9));
  long expected_deaths = 0;
  for (const auto& fu : cohort.followups) expected_deaths += fu.died() ? 1 : 0;
  CHECK(deaths == expected_deaths);
}

TEST_CASE("benefit grid renderings carry headers") {
  const BenefitGrid grid{};
  const std::string csv = render_benefit_grid_csv(grid);
  CHECK(csv.find("mortality_cat,shock_cat,count") != std::string::npos);
  const std::string text = render_benefit_grid_text(grid);
  CHECK_FALSE(text.empty());
}

TEST_CASE("score correlation on identical and independent inputs") {
  SplitRng rng(19);
  Eigen::VectorXd x(10000), y(10000);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
  }
  const CorrelationResult same = score_correlation(x, x);
  CHECK(same.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.n == 10000);

  const CorrelationResult indep = score_correlation(x, y);
  CHECK(std::abs(indep.r) < 0.05);
  CHECK(indep.p > 1e-4);

  const CorrelationResult strong = score_correlation(x, (x.array() + 0.3 * y.array()).matrix());
  CHECK(strong.r > 0.9);
  CHECK(strong.p < 1e-10);
}

TEST_CASE("stratified benefit flags a true interaction and respects truth") {
  // Above-median stratum: ICD halves the hazard; below-median: no effect.
  using testsupport::CohortRow;
  SplitRng rng(23);
  std::vector<CohortRow> rows;
  Eigen::VectorXd scores(400);
  for (int i = 0; i < 400; ++i) {
    CohortRow r;
    r.id = "S" + std::to_string(i);
    const bool above = i >= 200;
    const bool icd = (i % 2) == 0;
    r.group = icd ? "icd" : "control";
    scores[i] = above ? 2.0 + rng.uniform() : rng.uniform();
    const double hazard = 0.30 * ((above && icd) ? 0.35 : 1.0);
    double t = rng.exponential(hazard);
    if (t > 5.0) {
      r.followup_years = 5.0;
      r.terminal_event = "alive_censored";
    } else {
      r.followup_years = t;
      r.terminal_event = "cardiac_death";
    }
    rows.push_back(r);
  }
  const CohortTable cohort = load_cohort(testsupport::cohort_csv(rows));
  const StratifiedBenefit sb = stratified_benefit(cohort, scores);
  CHECK(sb.n_above == 200);
  CHECK(sb.n_below == 200);
  CHECK(sb.hr_above < sb.hr_below);
  CHECK(sb.hr_above < 0.7);
  CHECK(sb.ci_above_lower < sb.hr_above);
  CHECK(sb.ci_above_upper > sb.hr_above);
  CHECK(sb.interaction_p < 0.05);
}

TEST_CASE("homogeneous effects rarely trigger the interaction test") {
  using testsupport::CohortRow;
  SplitRng root(29);
  int rejections = 0;
  const int reps = 60;
  for (int rep = 0; rep < reps; ++rep) {
    SplitRng rng = root.child(rep);
    std::vector<CohortRow> rows;
    Eigen::VectorXd scores(240);
    for (int i = 0; i < 240; ++i) {
      CohortRow r;
      r.id = "H" + std::to_string(i);
      const bool icd = (i % 2) == 0;
      r.group = icd ? "icd" : "control";
      scores[i] = rng.normal();
      const double hazard = 0.35 * (icd ? 0.8 : 1.0);  // same HR in both strata
      double t = rng.exponential(hazard);
      if (t > 5.0) {
        r.followup_years = 5.0;
        r.terminal_event = "alive_censored";
      } else {
        r.followup_years = t;
        r.terminal_event = "scd";
      }
      rows.push_back(r);
    }
    const CohortTable cohort = load_cohort(testsupport::cohort_csv(rows));
    const StratifiedBenefit sb = stratified_benefit(cohort, scores);
    if (sb.interaction_p < 0.05) ++rejections;
  }
  // Nominal 5% level: allow generous Monte Carlo slack.
  CHECK(rejections <= reps / 4);
}

TEST_CASE("a stratum missing an arm is an error naming the stratum") {
  using testsupport::CohortRow;
  std::vector<CohortRow> rows;
  Eigen::VectorXd scores(40);
  for (int i = 0; i < 40; ++i) {
    CohortRow r;
    r.id = "T" + std::to_string(i);
    const bool above = i >= 20;
    r.group = above ? "icd" : (i % 2 ? "icd" : "control");  // above: ICD only
    scores[i] = above ? 10.0 : 1.0;
    r.followup_years = 2.0 + i * 0.01;
    r.terminal_event = (i % 3 == 0) ? "scd" : "alive_censored";
    rows.push_back(r);
  }
  const CohortTable cohort = load_cohort(testsupport::cohort_csv(rows));
  try {
    stratified_benefit(cohort, scores);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("stratum") != std::string::npos);
  }
}
