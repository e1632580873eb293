#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "holterisk/errors.hpp"

namespace holterisk {

enum class Sex { female, male };
enum class Etiology { ischemic, dilated };
enum class Nyha { I = 1, II = 2, III = 3, IV = 4 };
enum class StudyGroup { icd, control };
enum class TerminalEvent { alive_censored, scd, cardiac_death, noncardiac_death };

const char* to_string(Sex s);
const char* to_string(Etiology e);
const char* to_string(Nyha n);
const char* to_string(StudyGroup g);
const char* to_string(TerminalEvent e);

struct Patient {
  std::string id;
  double age_years = 0.0;
  Sex sex = Sex::male;
  Etiology etiology = Etiology::ischemic;
  double lvef_percent = 0.0;
  Nyha nyha = Nyha::II;
  bool af = false;
  bool diabetes = false;
  std::optional<double> creatinine_mg_dl;
  std::optional<double> bnp_pg_ml;
  StudyGroup group = StudyGroup::icd;
  bool prior_device = false;
  bool crt_indicated = false;
  bool secondary_prophylaxis = false;
  bool unstable = false;
  bool av_block = false;
  bool life_expectancy_le_1y = false;
  // Extra baseline covariates not covered by the named schema.
  std::map<std::string, double> extras;
};

struct FollowUp {
  double time_years = 0.0;
  TerminalEvent terminal_event = TerminalEvent::alive_censored;
  std::optional<double> first_appropriate_shock_years;
  std::optional<double> first_inappropriate_shock_years;
  std::optional<double> crossover_years;

  bool died() const { return terminal_event != TerminalEvent::alive_censored; }
  void validate() const;
};

struct EligibilityResult {
  bool eligible = false;
  std::vector<std::string> failed_criteria;
};

struct CohortTable {
  std::vector<Patient> patients;
  std::vector<FollowUp> followups;  // aligned with patients
  std::vector<std::string> warnings;

  std::size_t size() const { return patients.size(); }
  // Fraction of patients with atrial fibrillation; empty table -> nullopt.
  std::optional<double> af_prevalence() const;
  // Index of a patient id, -1 when absent.
  int index_of(std::string_view id) const;
};

// Fraction above which the loader warns about atrial fibrillation prevalence.
inline constexpr double kAfPrevalenceCap = 0.15;

// Parses the documented cohort CSV schema; see README for column names.
// Missing mandatory columns, duplicate ids, and unparseable numerics are
// errors; an AF prevalence above the cap adds a warning to the table.
CohortTable load_cohort(std::string_view csv_text);

std::string write_cohort_csv(const CohortTable& cohort);

// Inclusion/exclusion rules for primary-prophylaxis candidacy. Total: never
// throws; every violated criterion is listed.
EligibilityResult check_eligibility(const Patient& p);

}  // namespace holterisk
