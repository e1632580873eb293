#include "holterisk/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace holterisk {

const char* to_string(Sex s) { return s == Sex::female ? "female" : "male"; }
const char* to_string(Etiology e) { return e == Etiology::ischemic ? "ischemic" : "dilated"; }
const char* to_string(Nyha n) {
  switch (n) {
    case Nyha::I: return "I";
    case Nyha::II: return "II";
    case Nyha::III: return "III";
    default: return "IV";
  }
}
const char* to_string(StudyGroup g) { return g == StudyGroup::icd ? "icd" : "control"; }
const char* to_string(TerminalEvent e) {
  switch (e) {
    case TerminalEvent::alive_censored: return "alive_censored";
    case TerminalEvent::scd: return "scd";
    case TerminalEvent::cardiac_death: return "cardiac_death";
    default: return "noncardiac_death";
  }
}

void FollowUp::validate() const {
  if (!(time_years >= 0.0)) throw DataError("follow-up time must be nonnegative");
  const double slack = 1e-9;
  if (first_appropriate_shock_years && *first_appropriate_shock_years > time_years + slack)
    throw DataError("first_appropriate_shock_years exceeds follow-up time");
  if (first_inappropriate_shock_years &&
      *first_inappropriate_shock_years > time_years + slack)
    throw DataError("first_inappropriate_shock_years exceeds follow-up time");
  if (crossover_years && *crossover_years > time_years + slack)
    throw DataError("crossover_years exceeds follow-up time");
}

std::optional<double> CohortTable::af_prevalence() const {
  if (patients.empty()) return std::nullopt;
  std::size_t n_af = 0;
  for (const auto& p : patients) n_af += p.af ? 1 : 0;
  return double(n_af) / double(patients.size());
}

int CohortTable::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < patients.size(); ++i)
    if (patients[i].id == id) return int(i);
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (quoted) {
      if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_num(const std::string& s, std::size_t row, const std::string& col) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ParseError("unparseable numeric '" + s + "' in column " + col, row);
  return v;
}

bool parse_bool(const std::string& s, std::size_t row, const std::string& col) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ParseError("unparseable boolean '" + s + "' in column " + col, row);
}

template <typename T>
T parse_enum(const std::string& s, std::size_t row, const std::string& col,
             std::initializer_list<std::pair<const char*, T>> table) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw ParseError("invalid value '" + s + "' in column " + col, row);
}

}  // namespace

CohortTable load_cohort(std::string_view csv_text) {
  CohortTable table;
  std::istringstream in{std::string(csv_text)};
  std::string line;
  if (!std::getline(in, line)) return table;  // empty text -> empty table
  const std::vector<std::string> header = split_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  const char* mandatory[] = {"id",   "age_years", "sex",  "etiology",   "lvef_percent",
                             "nyha", "af",        "group", "time_years", "terminal_event"};
  for (const char* c : mandatory)
    if (!col.count(c)) throw DataError(std::string("missing mandatory column '") + c + "'");

  auto field = [&](const std::vector<std::string>& f, const char* name) -> std::string {
    const auto it = col.find(name);
    if (it == col.end() || it->second >= f.size()) return "";
    return f[it->second];
  };

  std::unordered_set<std::string> ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line);
    Patient p;
    FollowUp fu;
    p.id = field(f, "id");
    if (p.id.empty()) throw ParseError("empty id", row);
    if (!ids.insert(p.id).second) throw ParseError("duplicate id '" + p.id + "'", row);
    p.age_years = parse_num(field(f, "age_years"), row, "age_years");
    p.sex = parse_enum<Sex>(field(f, "sex"), row, "sex",
                            {{"female", Sex::female}, {"male", Sex::male}});
    p.etiology = parse_enum<Etiology>(field(f, "etiology"), row, "etiology",
                                      {{"ischemic", Etiology::ischemic},
                                       {"dilated", Etiology::dilated}});
    p.lvef_percent = parse_num(field(f, "lvef_percent"), row, "lvef_percent");
    if (!(p.lvef_percent > 0.0 && p.lvef_percent <= 100.0))
      throw ParseError("lvef_percent outside (0, 100]", row);
    if (!(p.age_years >= 0.0)) throw ParseError("age_years must be nonnegative", row);
    p.nyha = parse_enum<Nyha>(field(f, "nyha"), row, "nyha",
                              {{"I", Nyha::I}, {"II", Nyha::II}, {"III", Nyha::III},
                               {"IV", Nyha::IV}});
    p.af = parse_bool(field(f, "af"), row, "af");
    p.group = parse_enum<StudyGroup>(field(f, "group"), row, "group",
                                     {{"icd", StudyGroup::icd},
                                      {"control", StudyGroup::control}});
    // Optional flags default to false when the column is absent.
    for (const auto& [name, member] :
         std::initializer_list<std::pair<const char*, bool Patient::*>>{
             {"diabetes", &Patient::diabetes},
             {"prior_device", &Patient::prior_device},
             {"crt_indicated", &Patient::crt_indicated},
             {"secondary_prophylaxis", &Patient::secondary_prophylaxis},
             {"unstable", &Patient::unstable},
             {"av_block", &Patient::av_block},
             {"life_expectancy_le_1y", &Patient::life_expectancy_le_1y}}) {
      const std::string v = field(f, name);
      if (!v.empty()) p.*member = parse_bool(v, row, name);
    }
    if (const std::string v = field(f, "creatinine_mg_dl"); !v.empty())
      p.creatinine_mg_dl = parse_num(v, row, "creatinine_mg_dl");
    if (const std::string v = field(f, "bnp_pg_ml"); !v.empty())
      p.bnp_pg_ml = parse_num(v, row, "bnp_pg_ml");
    if (const std::string v = field(f, "extras"); !v.empty()) {
      // Semicolon-separated key=value pairs.
      std::size_t pos = 0;
      while (pos < v.size()) {
        std::size_t semi = v.find(';', pos);
        if (semi == std::string::npos) semi = v.size();
        const std::string pair = v.substr(pos, semi - pos);
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos) throw ParseError("malformed extras pair '" + pair + "'", row);
        p.extras[pair.substr(0, eq)] = parse_num(pair.substr(eq + 1), row, "extras");
        pos = semi + 1;
      }
    }

    fu.time_years = parse_num(field(f, "time_years"), row, "time_years");
    fu.terminal_event = parse_enum<TerminalEvent>(
        field(f, "terminal_event"), row, "terminal_event",
        {{"alive_censored", TerminalEvent::alive_censored},
         {"scd", TerminalEvent::scd},
         {"cardiac_death", TerminalEvent::cardiac_death},
         {"noncardiac_death", TerminalEvent::noncardiac_death}});
    if (const std::string v = field(f, "first_appropriate_shock_years"); !v.empty())
      fu.first_appropriate_shock_years = parse_num(v, row, "first_appropriate_shock_years");
    if (const std::string v = field(f, "first_inappropriate_shock_years"); !v.empty())
      fu.first_inappropriate_shock_years = parse_num(v, row, "first_inappropriate_shock_years");
    if (const std::string v = field(f, "crossover_years"); !v.empty())
      fu.crossover_years = parse_num(v, row, "crossover_years");
    try {
      fu.validate();
    } catch (const DataError& e) {
      throw ParseError(e.what(), row);
    }

    table.patients.push_back(std::move(p));
    table.followups.push_back(fu);
  }

  if (const auto prev = table.af_prevalence(); prev && *prev > kAfPrevalenceCap) {
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "atrial fibrillation prevalence %.1f%% exceeds the 15%% cap", *prev * 100.0);
    table.warnings.emplace_back(buf);
  }
  return table;
}

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : ""; }

}  // namespace

std::string write_cohort_csv(const CohortTable& cohort) {
  std::string out =
      "id,age_years,sex,etiology,lvef_percent,nyha,af,diabetes,creatinine_mg_dl,"
      "bnp_pg_ml,group,prior_device,crt_indicated,secondary_prophylaxis,unstable,"
      "av_block,life_expectancy_le_1y,time_years,terminal_event,"
      "first_appropriate_shock_years,first_inappropriate_shock_years,crossover_years,extras\n";
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    const Patient& p = cohort.patients[i];
    const FollowUp& fu = cohort.followups[i];
    std::string extras;
    for (const auto& [k, v] : p.extras) {
      if (!extras.empty()) extras += ';';
      extras += k + "=" + fmt_num(v);
    }
    out += p.id + ',' + fmt_num(p.age_years) + ',' + to_string(p.sex) + ',' +
           to_string(p.etiology) + ',' + fmt_num(p.lvef_percent) + ',' + to_string(p.nyha) +
           ',' + (p.af ? "1" : "0") + ',' + (p.diabetes ? "1" : "0") + ',' +
           fmt_opt(p.creatinine_mg_dl) + ',' + fmt_opt(p.bnp_pg_ml) + ',' +
           to_string(p.group) + ',' + (p.prior_device ? "1" : "0") + ',' +
           (p.crt_indicated ? "1" : "0") + ',' + (p.secondary_prophylaxis ? "1" : "0") + ',' +
           (p.unstable ? "1" : "0") + ',' + (p.av_block ? "1" : "0") + ',' +
           (p.life_expectancy_le_1y ? "1" : "0") + ',' + fmt_num(fu.time_years) + ',' +
           to_string(fu.terminal_event) + ',' + fmt_opt(fu.first_appropriate_shock_years) +
           ',' + fmt_opt(fu.first_inappropriate_shock_years) + ',' +
           fmt_opt(fu.crossover_years) + ',' + extras + '\n';
  }
  return out;
}

EligibilityResult check_eligibility(const Patient& p) {
  EligibilityResult r;
  auto fail = [&](const char* criterion) { r.failed_criteria.emplace_back(criterion); };

  // Inclusion criteria. Etiology is ischemic or dilated by construction.
  if (!(p.lvef_percent <= 35.0)) fail("LVEF <= 35");
  if (p.nyha == Nyha::IV) fail("NYHA class II-III (or I with LVEF <= 30)");
  if (p.nyha == Nyha::I && !(p.lvef_percent <= 30.0)) fail("NYHA I requires LVEF <= 30");
  if (!(p.age_years >= 18.0)) fail("age >= 18");

  // Exclusion criteria.
  if (p.secondary_prophylaxis) fail("secondary prophylaxis");
  if (p.crt_indicated) fail("CRT planned or indicated");
  if (p.unstable) fail("unstable cardiac condition");
  if (p.av_block) fail("higher degree AV block");
  if (p.prior_device) fail("previous device");
  if (p.life_expectancy_le_1y) fail("life expectancy <= 1 year");

  r.eligible = r.failed_criteria.empty();
  return r;
}

}  // namespace holterisk
