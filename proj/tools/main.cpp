// holterisk: batch front door for Holter analysis, cohort scoring, survival
// model fitting, trial power calculations, simulation, and reporting.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "holterisk/analyzer.hpp"
#include "holterisk/cohort.hpp"
#include "holterisk/markers.hpp"
#include "holterisk/risk.hpp"
#include "holterisk/sim.hpp"
#include "holterisk/survival.hpp"

namespace {

using holterisk::DataError;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw DataError("cannot read " + path);
  return buf.str();
}

// All outputs go through a temp-file + rename so concurrent or interrupted
// runs never leave partial files behind.
void write_file_atomic(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot create " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::vector<std::string> inputs;
  std::string out_dir = ".";
  int jobs = 1;
  bool strict = false;
  bool json = false;
};

struct AnalyzeOutcome {
  bool ok = false;
  std::string message;   // error text when !ok
  std::string out_path;  // marker CSV path when ok
  holterisk::RecordSummary summary;
};

AnalyzeOutcome analyze_one(const std::string& input, const AnalyzeOptions& opt) {
  AnalyzeOutcome out;
  try {
    const holterisk::AnalysisResult result = holterisk::analyze_file(input);
    const std::string csv =
        holterisk::markers_to_csv(result.summary.record_id, result.markers);
    const std::filesystem::path base =
        std::filesystem::path(opt.out_dir) / (result.summary.record_id + ".markers");
    write_file_atomic(base.string() + ".csv", csv);
    if (opt.json)
      write_file_atomic(base.string() + ".json",
                        holterisk::markers_to_json(result.summary.record_id, result.markers));
    out.ok = true;
    out.out_path = base.string() + ".csv";
    out.summary = result.summary;
  } catch (const std::exception& e) {
    out.message = e.what();
  }
  return out;
}

int cmd_analyze(const AnalyzeOptions& opt) {
  if (opt.inputs.empty()) {
    std::cout << "no inputs\n";
    return 0;
  }
  std::filesystem::create_directories(opt.out_dir);

  std::vector<AnalyzeOutcome> outcomes(opt.inputs.size());
  if (opt.strict || opt.jobs <= 1) {
    for (size_t i = 0; i < opt.inputs.size(); ++i) {
      outcomes[i] = analyze_one(opt.inputs[i], opt);
      if (opt.strict && !outcomes[i].ok) {
        std::cerr << "error: " << opt.inputs[i] << ": " << outcomes[i].message << "\n";
        return 2;
      }
    }
  } else {
    std::atomic<size_t> cursor{0};
    const int workers =
        std::min<int>(opt.jobs, static_cast<int>(opt.inputs.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          const size_t i = cursor.fetch_add(1);
          if (i >= opt.inputs.size()) return;
          outcomes[i] = analyze_one(opt.inputs[i], opt);
        }
      });
    for (std::thread& t : pool) t.join();
  }

  int failures = 0;
  for (size_t i = 0; i < opt.inputs.size(); ++i) {
    const AnalyzeOutcome& o = outcomes[i];
    if (o.ok) {
      std::cout << o.summary.record_id << ": " << o.summary.beat_count << " beats ("
                << o.summary.normal_count << " normal, " << o.summary.ventricular_count
                << " ventricular, " << o.summary.artifact_count << " artifact) -> "
                << o.out_path << "\n";
    } else {
      ++failures;
      std::cerr << "error: " << opt.inputs[i] << ": " << o.message << "\n";
    }
  }
  if (failures > 0) {
    std::cerr << failures << " of " << opt.inputs.size() << " inputs failed\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// power

int cmd_power(const holterisk::PowerSpec& spec, bool invert, long events) {
  spec.validate();
  if (invert) {
    const double hr = holterisk::detectable_hazard_ratio(spec, events);
    std::cout << "events: " << events << "\n"
              << "alpha (two-sided): " << fmt(spec.alpha_two_sided)
              << "  power: " << fmt(spec.power)
              << "  allocation: " << fmt(spec.allocation_fraction) << "\n"
              << "detectable hazard ratio: " << fmt(hr, "%.4f") << "\n";
  } else {
    const long d = holterisk::schoenfeld_events(spec);
    std::cout << "alpha (two-sided): " << fmt(spec.alpha_two_sided)
              << "  power: " << fmt(spec.power)
              << "  hazard ratio: " << fmt(spec.hazard_ratio)
              << "  allocation: " << fmt(spec.allocation_fraction) << "\n"
              << "required events: " << d << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string cohort_path;
  std::string endpoint = "mortality";
  std::vector<std::string> covariates = {"group_icd"};
  bool fine_gray = false;
  int cause = holterisk::kCauseScd;
  std::string missing = "skip";
  std::string out;
};

int cmd_fit(const FitOptions& opt) {
  const holterisk::CohortTable cohort = holterisk::load_cohort(read_file(opt.cohort_path));
  print_warnings(cohort.warnings);

  const holterisk::Endpoint endpoint = opt.endpoint == "shock"
                                           ? holterisk::Endpoint::first_appropriate_shock
                                           : holterisk::Endpoint::mortality;
  const holterisk::MissingPolicy policy = opt.missing == "reject"
                                              ? holterisk::MissingPolicy::reject
                                              : holterisk::MissingPolicy::skip_with_warning;
  std::vector<std::string> warnings;
  const holterisk::SurvivalData data =
      holterisk::cohort_to_survival(cohort, endpoint, opt.covariates, policy, &warnings);
  print_warnings(warnings);

  const holterisk::SurvivalFit fit = opt.fine_gray
                                         ? holterisk::fine_gray_fit(data, opt.cause)
                                         : holterisk::cox_fit(data);

  nlohmann::ordered_json j;
  j["model"] = opt.fine_gray ? "fine_gray" : "cox";
  j["endpoint"] = opt.endpoint;
  if (opt.fine_gray) j["cause"] = opt.cause;
  j["n"] = data.size();
  nlohmann::ordered_json estimates = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
    nlohmann::ordered_json e;
    e["covariate"] = fit.covariate_names[static_cast<size_t>(k)];
    e["beta"] = fit.beta[k];
    e["se"] = fit.se[k];
    e["hr"] = fit.hr[k];
    e["ci_lower"] = fit.ci_lower[k];
    e["ci_upper"] = fit.ci_upper[k];
    estimates.push_back(std::move(e));
  }
  j["estimates"] = std::move(estimates);
  j["loglik"] = fit.loglik;
  j["null_loglik"] = fit.null_loglik;
  j["c_statistic"] = fit.c_statistic;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;

  const std::string text = j.dump(2) + "\n";
  if (opt.out.empty())
    std::cout << text;
  else
    write_file_atomic(opt.out, text);
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOptions {
  std::string cohort_path;
  std::string markers_path;
  std::string mortality_weights;  // empty = built-in
  std::string shock_weights;
  std::string missing = "skip";
  std::string out;
};

int cmd_score(const ScoreOptions& opt) {
  const holterisk::CohortTable cohort = holterisk::load_cohort(read_file(opt.cohort_path));
  print_warnings(cohort.warnings);

  const holterisk::ScoreWeights mortality_w =
      opt.mortality_weights.empty()
          ? holterisk::default_mortality_weights()
          : holterisk::load_weights_json(read_file(opt.mortality_weights));
  const holterisk::ScoreWeights shock_w =
      opt.shock_weights.empty() ? holterisk::default_shock_weights()
                                : holterisk::load_weights_json(read_file(opt.shock_weights));

  std::vector<std::pair<std::string, holterisk::MarkerVector>> marker_rows;
  if (!opt.markers_path.empty())
    marker_rows = holterisk::markers_from_csv(read_file(opt.markers_path));
  const auto markers_for = [&](const std::string& id) -> const holterisk::MarkerVector* {
    for (const auto& [rid, mv] : marker_rows)
      if (rid == id) return &mv;
    return nullptr;
  };

  const holterisk::MissingPolicy policy = opt.missing == "reject"
                                              ? holterisk::MissingPolicy::reject
                                              : holterisk::MissingPolicy::skip_with_warning;

  const size_t n = cohort.patients.size();
  Eigen::VectorXd mort(static_cast<Eigen::Index>(n)), shock(static_cast<Eigen::Index>(n));
  std::vector<std::string> warnings;
  for (size_t i = 0; i < n; ++i) {
    const holterisk::Patient& p = cohort.patients[i];
    const holterisk::MarkerVector* mv = markers_for(p.id);
    mort[static_cast<Eigen::Index>(i)] = holterisk::compute_score(p, mv, mortality_w, policy, &warnings);
    shock[static_cast<Eigen::Index>(i)] = holterisk::compute_score(p, mv, shock_w, policy, &warnings);
  }
  print_warnings(warnings);

  const holterisk::Categorization mort_cat = holterisk::categorize(mort);
  const holterisk::Categorization shock_cat = holterisk::categorize(shock);
  print_warnings(mort_cat.warnings);
  print_warnings(shock_cat.warnings);

  std::ostringstream csv;
  csv << "patient_id,mortality_score,shock_score,mortality_category,shock_category\n";
  for (size_t i = 0; i < n; ++i) {
    csv << cohort.patients[i].id << ',' << fmt(mort[static_cast<Eigen::Index>(i)], "%.17g")
        << ',' << fmt(shock[static_cast<Eigen::Index>(i)], "%.17g") << ','
        << to_string(mort_cat.categories[i]) << ',' << to_string(shock_cat.categories[i])
        << "\n";
  }
  if (opt.out.empty())
    std::cout << csv.str();
  else
    write_file_atomic(opt.out, csv.str());

  std::cout << "mortality score cuts: low <= " << fmt(mort_cat.cut_low_max, "%.6g")
            << ", intermediate <= " << fmt(mort_cat.cut_int_max, "%.6g") << "\n"
            << "shock score cuts: low <= " << fmt(shock_cat.cut_low_max, "%.6g")
            << ", intermediate <= " << fmt(shock_cat.cut_int_max, "%.6g") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const holterisk::SimConfig& config, const std::string& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const holterisk::SimResult sim = holterisk::simulate_cohort(config);
  print_warnings(sim.cohort.warnings);

  const std::filesystem::path dir(out_dir);
  write_file_atomic((dir / "cohort.csv").string(), holterisk::write_cohort_csv(sim.cohort));
  write_file_atomic((dir / "episodes.csv").string(),
                    holterisk::write_episode_csv(sim.episodes));
  const holterisk::CalibrationReport cal = holterisk::calibration_report(sim, config);
  write_file_atomic((dir / "calibration.txt").string(), cal.render_text());
  std::cout << "wrote " << (dir / "cohort.csv").string() << ", "
            << (dir / "episodes.csv").string() << ", "
            << (dir / "calibration.txt").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::string cohort_path;
  std::string scores_path;
  std::string out_dir = ".";
};

struct ScoreRow {
  std::string id;
  double mortality = 0.0;
  double shock = 0.0;
};

std::vector<ScoreRow> parse_scores_csv(const std::string& text) {
  std::vector<ScoreRow> rows;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw holterisk::ParseError("empty score file", 0);
  if (line.rfind("patient_id,mortality_score,shock_score", 0) != 0)
    throw holterisk::ParseError("unexpected score CSV header: " + line, 0);
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ScoreRow r;
    std::string m, s;
    if (!std::getline(ls, r.id, ',') || !std::getline(ls, m, ',') || !std::getline(ls, s, ','))
      throw holterisk::ParseError("malformed score row " + std::to_string(row), row);
    try {
      r.mortality = std::stod(m);
      r.shock = std::stod(s);
    } catch (const std::exception&) {
      throw holterisk::ParseError("non-numeric score in row " + std::to_string(row), row);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void append_at_risk(std::ostringstream& out, const char* name,
                    const holterisk::StepCurve& curve) {
  out << "  " << name << ":";
  for (Eigen::Index i = 0; i < curve.at_risk.size(); ++i) out << ' ' << curve.at_risk[i];
  out << "\n";
}

void append_curve_csv(std::ostringstream& out, const char* name,
                      const holterisk::StepCurve& curve) {
  out << name << ",0," << fmt(curve.initial_value, "%.17g") << "\n";
  for (Eigen::Index i = 0; i < curve.times.size(); ++i)
    out << name << ',' << fmt(curve.times[i], "%.17g") << ','
        << fmt(curve.values[i], "%.17g") << "\n";
}

int cmd_report(const ReportOptions& opt) {
  const holterisk::CohortTable cohort = holterisk::load_cohort(read_file(opt.cohort_path));
  print_warnings(cohort.warnings);
  std::filesystem::create_directories(opt.out_dir);

  const std::vector<ScoreRow> scores = parse_scores_csv(read_file(opt.scores_path));
  Eigen::VectorXd mort(static_cast<Eigen::Index>(scores.size()));
  Eigen::VectorXd shock(static_cast<Eigen::Index>(scores.size()));
  for (size_t i = 0; i < scores.size(); ++i) {
    mort[static_cast<Eigen::Index>(i)] = scores[i].mortality;
    shock[static_cast<Eigen::Index>(i)] = scores[i].shock;
  }
  const holterisk::Categorization mort_cat = holterisk::categorize(mort);
  const holterisk::Categorization shock_cat = holterisk::categorize(shock);

  std::vector<holterisk::RiskProfile> profiles(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    profiles[i].id = scores[i].id;
    profiles[i].mortality_score = scores[i].mortality;
    profiles[i].shock_score = scores[i].shock;
    profiles[i].mortality_cat = mort_cat.categories[i];
    profiles[i].shock_cat = shock_cat.categories[i];
  }
  const holterisk::BenefitGrid grid = holterisk::benefit_grid(profiles, cohort);

  // Survival inputs; group membership is the only covariate we need here.
  std::vector<std::string> warnings;
  const holterisk::SurvivalData mortality_data = holterisk::cohort_to_survival(
      cohort, holterisk::Endpoint::mortality, {"group_icd"},
      holterisk::MissingPolicy::skip_with_warning, &warnings);
  const holterisk::SurvivalData shock_data = holterisk::cohort_to_survival(
      cohort, holterisk::Endpoint::first_appropriate_shock, {"group_icd"},
      holterisk::MissingPolicy::skip_with_warning, &warnings);
  print_warnings(warnings);

  std::vector<int> icd_rows, control_rows;
  for (Eigen::Index i = 0; i < mortality_data.size(); ++i)
    (mortality_data.x(i, 0) > 0.5 ? icd_rows : control_rows).push_back(static_cast<int>(i));
  const holterisk::SurvivalData icd_data = mortality_data.subset(icd_rows);
  const holterisk::SurvivalData control_data = mortality_data.subset(control_rows);

  const holterisk::StepCurve km_icd = holterisk::kaplan_meier(icd_data);
  const holterisk::StepCurve km_control = holterisk::kaplan_meier(control_data);
  const holterisk::StepCurve cif_scd =
      holterisk::cumulative_incidence(mortality_data, holterisk::kCauseScd);
  const holterisk::StepCurve cif_cardiac =
      holterisk::cumulative_incidence(mortality_data, holterisk::kCauseCardiac);
  const holterisk::StepCurve cif_noncardiac =
      holterisk::cumulative_incidence(mortality_data, holterisk::kCauseNoncardiac);
  const holterisk::StepCurve cif_shock =
      holterisk::cumulative_incidence(shock_data, holterisk::kCauseShock);

  long deaths = 0, shocks = 0;
  double person_years = 0.0;
  for (const holterisk::FollowUp& fu : cohort.followups) {
    if (fu.died()) ++deaths;
    if (fu.first_appropriate_shock_years) ++shocks;
    person_years += fu.time_years;
  }
  const holterisk::CorrelationResult corr = holterisk::score_correlation(mort, shock);

  std::ostringstream rep;
  rep << "== cohort ==\n"
      << "patients: " << cohort.patients.size() << " (icd " << icd_rows.size()
      << ", control " << control_rows.size() << ")\n"
      << "deaths: " << deaths << "  appropriate shocks: " << shocks << "\n"
      << "person-years: " << fmt(person_years) << "\n"
      << "annualized mortality: "
      << fmt(holterisk::annualized_rate(static_cast<double>(deaths), person_years), "%.3f")
      << " %/yr\n\n";

  rep << "== survival ==\n"
      << "at-risk (years): 0 1 2 3 4 5 6\n";
  append_at_risk(rep, "icd", km_icd);
  append_at_risk(rep, "control", km_control);
  rep << "curves written to survival_curves.csv\n\n";

  rep << "== risk grid (annualized % per year) ==\n"
      << holterisk::render_benefit_grid_text(grid) << "\n";

  rep << "== scores ==\n"
      << "mortality/shock score correlation r = " << fmt(corr.r, "%.4f")
      << " (p = " << fmt(corr.p, "%.4g") << ", n = " << corr.n << ")\n";
  if (mort_cat.degenerate || shock_cat.degenerate)
    rep << "warning: degenerate score distribution\n";
  for (const std::string& w : mort_cat.warnings) rep << "warning: " << w << "\n";
  for (const std::string& w : shock_cat.warnings) rep << "warning: " << w << "\n";

  std::ostringstream curves;
  curves << "curve,time_years,value\n";
  append_curve_csv(curves, "km_icd", km_icd);
  append_curve_csv(curves, "km_control", km_control);
  append_curve_csv(curves, "cif_scd", cif_scd);
  append_curve_csv(curves, "cif_cardiac", cif_cardiac);
  append_curve_csv(curves, "cif_noncardiac", cif_noncardiac);
  append_curve_csv(curves, "cif_shock", cif_shock);

  const std::filesystem::path dir(opt.out_dir);
  write_file_atomic((dir / "report.txt").string(), rep.str());
  write_file_atomic((dir / "survival_curves.csv").string(), curves.str());
  write_file_atomic((dir / "benefit_grid.csv").string(),
                    holterisk::render_benefit_grid_csv(grid));
  std::cout << "wrote " << (dir / "report.txt").string() << ", "
            << (dir / "survival_curves.csv").string() << ", "
            << (dir / "benefit_grid.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holterisk: Holter marker extraction, risk scoring, and trial statistics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; command sections as [command]; "
                                 "flags override file values");
  // An unrecognized key in a config file is a user error, not noise to skip.
  app.allow_config_extras(CLI::config_extras_mode::error);

  AnalyzeOptions analyze_opt;
  CLI::App* analyze = app.add_subcommand("analyze", "extract the marker battery from Holter records");
  analyze->add_option("inputs", analyze_opt.inputs, "record header files");
  analyze->add_option("--out-dir", analyze_opt.out_dir, "output directory")->capture_default_str();
  analyze->add_option("--jobs", analyze_opt.jobs, "parallel worker count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze->add_flag("--strict", analyze_opt.strict, "stop at the first failing input");
  analyze->add_flag("--json", analyze_opt.json, "also write per-record JSON");

  holterisk::PowerSpec power_spec;
  bool power_invert = false;
  long power_events = 0;
  CLI::App* power = app.add_subcommand("power", "log-rank event counts and detectable effects");
  power->add_option("--alpha", power_spec.alpha_two_sided, "two-sided type I error")
      ->capture_default_str();
  power->add_option("--power", power_spec.power, "target power")->capture_default_str();
  power->add_option("--hr", power_spec.hazard_ratio, "hazard ratio to detect")
      ->capture_default_str();
  power->add_option("--alloc", power_spec.allocation_fraction,
                    "fraction allocated to the first group")
      ->capture_default_str();
  power->add_flag("--invert", power_invert, "solve for the detectable hazard ratio");
  power->add_option("--events", power_events, "observed/planned event count (with --invert)");

  FitOptions fit_opt;
  CLI::App* fit = app.add_subcommand("fit", "fit a Cox or Fine-Gray model to a cohort");
  fit->add_option("cohort", fit_opt.cohort_path, "cohort CSV")->required();
  fit->add_option("--endpoint", fit_opt.endpoint, "mortality|shock")
      ->check(CLI::IsMember({"mortality", "shock"}))
      ->capture_default_str();
  fit->add_option("--covariates", fit_opt.covariates, "covariate names")
      ->delimiter(',')
      ->capture_default_str();
  fit->add_flag("--fine-gray", fit_opt.fine_gray, "subdistribution hazard model");
  fit->add_option("--cause", fit_opt.cause, "cause of interest (Fine-Gray)")
      ->capture_default_str();
  fit->add_option("--missing", fit_opt.missing, "skip|reject incomplete rows")
      ->check(CLI::IsMember({"skip", "reject"}))
      ->capture_default_str();
  fit->add_option("--out", fit_opt.out, "output JSON path (default: stdout)");

  ScoreOptions score_opt;
  CLI::App* score = app.add_subcommand("score", "compute dual risk scores for a cohort");
  score->add_option("cohort", score_opt.cohort_path, "cohort CSV")->required();
  score->add_option("--markers", score_opt.markers_path, "marker CSV from analyze");
  score->add_option("--mortality-weights", score_opt.mortality_weights,
                    "weights JSON (default: built-in)");
  score->add_option("--shock-weights", score_opt.shock_weights,
                    "weights JSON (default: built-in)");
  score->add_option("--missing", score_opt.missing, "skip|reject missing terms")
      ->check(CLI::IsMember({"skip", "reject"}))
      ->capture_default_str();
  score->add_option("--out", score_opt.out, "output CSV path (default: stdout)");

  holterisk::SimConfig sim_config;
  std::string sim_out_dir = ".";
  std::vector<double> sim_cause_mix;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic ICD/control cohort");
  simulate->add_option("--n-icd", sim_config.n_icd)->capture_default_str();
  simulate->add_option("--n-control", sim_config.n_control)->capture_default_str();
  simulate->add_option("--mortality-hazard", sim_config.annual_mortality_hazard,
                       "control-arm hazard per year")
      ->capture_default_str();
  simulate->add_option("--shock-hazard", sim_config.annual_shock_hazard)->capture_default_str();
  simulate->add_option("--icd-hr", sim_config.icd_mortality_hr)->capture_default_str();
  simulate->add_option("--accrual", sim_config.accrual_years, "uniform accrual span, years")
      ->capture_default_str();
  simulate->add_option("--followup", sim_config.max_followup_years)->capture_default_str();
  simulate->add_option("--cause-mix", sim_cause_mix,
                       "P(scd),P(cardiac),P(noncardiac)")
      ->delimiter(',')
      ->expected(3);
  simulate->add_option("--crossover", sim_config.crossover_fraction)->capture_default_str();
  simulate->add_option("--af", sim_config.af_prevalence)->capture_default_str();
  simulate->add_option("--rho", sim_config.score_correlation_rho)->capture_default_str();
  simulate->add_option("--score-mortality-loghr", sim_config.score_mortality_loghr)
      ->capture_default_str();
  simulate->add_option("--score-shock-loghr", sim_config.score_shock_loghr)
      ->capture_default_str();
  simulate->add_option("--seed", sim_config.seed)->capture_default_str();
  simulate->add_option("--out-dir", sim_out_dir)->capture_default_str();

  ReportOptions report_opt;
  CLI::App* report = app.add_subcommand("report", "benefit grid, curves, and summaries");
  report->add_option("cohort", report_opt.cohort_path, "cohort CSV")->required();
  report->add_option("--scores", report_opt.scores_path, "score CSV from the score command")
      ->required();
  report->add_option("--out-dir", report_opt.out_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*analyze) return cmd_analyze(analyze_opt);
    if (*power) return cmd_power(power_spec, power_invert, power_events);
    if (*fit) return cmd_fit(fit_opt);
    if (*score) return cmd_score(score_opt);
    if (*simulate) {
      if (!sim_cause_mix.empty())
        for (int i = 0; i < 3; ++i) sim_config.death_cause_mix[i] = sim_cause_mix[static_cast<size_t>(i)];
      return cmd_simulate(sim_config, sim_out_dir);
    }
    if (*report) return cmd_report(report_opt);
  } catch (const holterisk::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const holterisk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
