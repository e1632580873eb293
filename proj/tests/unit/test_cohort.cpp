#include <string>

#include "doctest.h"
#include "holterisk/cohort.hpp"
#include "holterisk/errors.hpp"
#include "support/synthetic.hpp"

using namespace holterisk;
using testsupport::CohortRow;
using testsupport::cohort_csv;

namespace {

Patient eligible_patient() {
  Patient p;
  p.id = "P1";
  p.age_years = 60;
  p.etiology = Etiology::ischemic;
  p.lvef_percent = 30;
  p.nyha = Nyha::II;
  return p;
}

}  // namespace

TEST_CASE("cohort CSV loads the documented schema") {
  std::vector<CohortRow> rows(3);
  rows[0].id = "A1";
  rows[1].id = "A2";
  rows[1].group = "control";
  rows[1].terminal_event = "scd";
  rows[1].followup_years = 2.5;
  rows[2].id = "A3";
  rows[2].first_appropriate_shock_years = "1.25";
  const CohortTable t = load_cohort(cohort_csv(rows));
  REQUIRE(t.size() == 3);
  CHECK(t.patients[0].id == "A1");
  CHECK(t.patients[1].group == StudyGroup::control);
  CHECK(t.followups[1].terminal_event == TerminalEvent::scd);
  CHECK(t.followups[1].time_years == doctest::Approx(2.5));
  REQUIRE(t.followups[2].first_appropriate_shock_years.has_value());
  CHECK(*t.followups[2].first_appropriate_shock_years == doctest::Approx(1.25));
  CHECK(t.warnings.empty());
  CHECK(t.index_of("A2") == 1);
  CHECK(t.index_of("ZZ") == -1);
}

TEST_CASE("atrial fibrillation prevalence above the cap warns") {
  std::vector<CohortRow> rows(5);
  for (size_t i = 0; i < rows.size(); ++i) rows[i].id = "P" + std::to_string(i);
  rows[0].af = 1;  // 20% > 15% cap
  const CohortTable t = load_cohort(cohort_csv(rows));
  REQUIRE(t.af_prevalence().has_value());
  CHECK(*t.af_prevalence() == doctest::Approx(0.2));
  REQUIRE_FALSE(t.warnings.empty());
  CHECK(t.warnings[0].find("fibrillation") != std::string::npos);

  rows[0].af = 0;
  CHECK(load_cohort(cohort_csv(rows)).warnings.empty());
}

TEST_CASE("unparseable numerics carry the row number") {
  std::vector<CohortRow> rows(3);
  rows[0].id = "P0";
  rows[1].id = "P1";
  rows[2].id = "P2";
  std::string csv = cohort_csv(rows);
  // Corrupt the LVEF of the second data row (file row 3).
  const size_t pos = csv.find("P1,64.0");
  REQUIRE(pos != std::string::npos);
  const size_t lvef_pos = csv.find(",28.0", pos);
  REQUIRE(lvef_pos != std::string::npos);
  csv.replace(lvef_pos, 5, ",abc0");
  try {
    load_cohort(csv);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 3);
    CHECK(std::string(e.what()).find("lvef") != std::string::npos);
  }
}

TEST_CASE("duplicate ids and missing mandatory columns are errors") {
  std::vector<CohortRow> rows(2);
  rows[0].id = "X";
  rows[1].id = "X";
  CHECK_THROWS_AS(load_cohort(cohort_csv(rows)), ParseError);

  CHECK_THROWS_AS(load_cohort("id,age_years\nP1,60\n"), DataError);
}

TEST_CASE("cohort CSV round trips") {
  std::vector<CohortRow> rows(4);
  for (size_t i = 0; i < rows.size(); ++i) rows[i].id = "R" + std::to_string(i);
  rows[2].terminal_event = "noncardiac_death";
  rows[3].crossover_years = "0.75";
  const CohortTable t = load_cohort(cohort_csv(rows));
  const CohortTable back = load_cohort(write_cohort_csv(t));
  REQUIRE(back.size() == t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(back.patients[i].id == t.patients[i].id);
    CHECK(back.patients[i].lvef_percent == t.patients[i].lvef_percent);
    CHECK(back.followups[i].terminal_event == t.followups[i].terminal_event);
    CHECK(back.followups[i].crossover_years == t.followups[i].crossover_years);
  }
}

TEST_CASE("eligibility accepts the guideline boundary") {
  Patient p = eligible_patient();
  p.lvef_percent = 35.0;
  CHECK(check_eligibility(p).eligible);
  p.lvef_percent = 35.01;
  const EligibilityResult r = check_eligibility(p);
  CHECK_FALSE(r.eligible);
  REQUIRE_FALSE(r.failed_criteria.empty());
}

TEST_CASE("NYHA I requires a stricter ejection fraction") {
  Patient p = eligible_patient();
  p.nyha = Nyha::I;
  p.lvef_percent = 30.0;
  CHECK(check_eligibility(p).eligible);
  p.lvef_percent = 31.0;
  CHECK_FALSE(check_eligibility(p).eligible);
  p.lvef_percent = 32.0;
  CHECK_FALSE(check_eligibility(p).eligible);
}

TEST_CASE("NYHA IV and minors are ineligible") {
  Patient p = eligible_patient();
  p.nyha = Nyha::IV;
  CHECK_FALSE(check_eligibility(p).eligible);
  p = eligible_patient();
  p.age_years = 17.9;
  CHECK_FALSE(check_eligibility(p).eligible);
  p.age_years = 18.0;
  CHECK(check_eligibility(p).eligible);
}

TEST_CASE("each exclusion flag alone flips eligibility") {
  for (bool Patient::*flag : {&Patient::secondary_prophylaxis, &Patient::crt_indicated,
                              &Patient::unstable, &Patient::av_block, &Patient::prior_device,
                              &Patient::life_expectancy_le_1y}) {
    Patient p = eligible_patient();
    CHECK(check_eligibility(p).eligible);
    p.*flag = true;
    const EligibilityResult r = check_eligibility(p);
    CHECK_FALSE(r.eligible);
    CHECK(r.failed_criteria.size() == 1);
  }
}

TEST_CASE("eligibility is monotone in exclusion flags") {
  Patient p = eligible_patient();
  p.secondary_prophylaxis = true;
  p.unstable = true;
  p.av_block = true;
  const EligibilityResult r = check_eligibility(p);
  CHECK_FALSE(r.eligible);
  CHECK(r.failed_criteria.size() == 3);
}
