#include "cuped/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "cuped/correlation_model.hpp"
#include "cuped/csv_io.hpp"
#include "cuped/estimators.hpp"
#include "cuped/report.hpp"
#include "cuped/simulation.hpp"
#include "cuped/stats.hpp"

namespace cuped::cli {
namespace {

struct AnalyzeArgs {
  std::string input;
  std::vector<std::string> covariates;
  double confidence{kDefaultConfidence};
  int folds{5};
  std::uint64_t seed{0};
  std::string output;
};

struct SimulateArgs {
  int n{2000};
  int reps{1000};
  double rho{0};
  double sigma{0};
  std::optional<double> tau;
  bool optimal_tau{false};
  double effect{0};
  std::uint64_t seed{0};
  double confidence{kDefaultConfidence};
  int threads{1};
  bool crossfit{false};
  int folds{5};
  std::string output;
  std::string csv;
  std::string dump_panel;
};

struct SweepArgs {
  std::vector<double> rho_grid;
  std::vector<double> sigma_grid;
  bool sigma_sqrt_rho{false};
  int n{2000};
  int reps{1000};
  double effect{0};
  std::uint64_t seed{0};
  int threads{1};
  std::string output;
  std::string json;
};

struct BoundArgs {
  double rho{0};
  bool json{false};
};

// Writes to `path`, or to `fallback` when the path is empty or "-".
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument("cannot open '" + path + "' for writing");
  body(file);
  if (!file) throw InvalidArgument("failed writing '" + path + "'");
}

int report_infeasible(std::ostream& err, const InfeasibleStructure& e) {
  err << "error: " << e.what() << '\n'
      << "determinant=" << format_number(e.determinant())
      << " min_eigenvalue=" << (std::isnan(e.min_eigenvalue()) ? "nan" : format_number(e.min_eigenvalue()))
      << '\n';
  return kInfeasible;
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentFrame frame;
  try {
    frame = read_frame_csv_file(args.input);
  } catch (const CsvError& e) {
    err << "error: " << args.input << ": " << e.what() << '\n';
    return kInputError;
  }

  std::vector<std::string> covariates = args.covariates;
  if (covariates.empty()) {
    covariates.emplace_back("y_pre");
    covariates.insert(covariates.end(), frame.covariate_names.begin(), frame.covariate_names.end());
  }
  for (const auto& name : covariates) {
    if (!frame.has_column(name)) {
      err << "error: unknown covariate '" << name << "'\n";
      return kInputError;
    }
  }

  nlohmann::json report;
  report["schema"] = kReportSchema;
  report["command"] = "analyze";
  report["input"] = args.input;
  report["n_units"] = frame.size();
  report["n_treatment"] = std::count(frame.arms.begin(), frame.arms.end(), Arm::kTreatment);
  report["n_control"] = std::count(frame.arms.begin(), frame.arms.end(), Arm::kControl);
  report["confidence_level"] = args.confidence;
  report["covariates"] = covariates;

  std::vector<std::string> failed;
  auto attempt = [&](Method m, const std::function<AdjustedEstimate()>& fit) {
    const std::string tag(method_tag(m));
    try {
      report["estimates"][tag] = to_json(fit());
    } catch (const Error& e) {
      report["estimates"][tag] = {{"method", tag}, {"error", e.what()}};
      err << "error: " << tag << ": " << e.what() << '\n';
      failed.push_back(tag);
    }
  };
  attempt(Method::kDiffInMeans, [&] { return diff_in_means(frame, args.confidence); });
  attempt(Method::kBasicRa, [&] { return basic_ra(frame, args.confidence); });
  attempt(Method::kMultiRa, [&] { return multi_ra(frame, covariates, args.confidence); });
  attempt(Method::kCrossfitRa, [&] {
    CrossfitOptions opts;
    opts.k_folds = args.folds;
    opts.seed = args.seed;
    opts.predictor_columns = covariates;
    return crossfit_ra(frame, opts, args.confidence);
  });

  report["correlations"] = nlohmann::json::array();
  for (const auto& name : frame.covariate_names) {
    nlohmann::json entry = {{"covariate", name}};
    try {
      const auto s = empirical_correlation(frame, name);
      entry.update(to_json(s));
      entry["assumption_holds"] = s.tau <= s.sigma;
    } catch (const Error& e) {
      entry["error"] = e.what();
    }
    report["correlations"].push_back(entry);
  }

  std::vector<Eigen::Index> control;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    if (frame.arms[static_cast<std::size_t>(i)] == Arm::kControl) control.push_back(i);
  }
  const double rho_hat = pearson(frame.y_pre(control), frame.y_post(control));
  report["rho_hat"] = std::isfinite(rho_hat) ? nlohmann::json(rho_hat) : nlohmann::json(nullptr);
  if (rho_hat >= 0.0 && rho_hat < 1.0) {
    report["headroom"] = {{"theorem_lower_bound", theorem_lower_bound(rho_hat)},
                          {"max_ci_width_reduction", max_ci_width_reduction(rho_hat)},
                          {"tightness_sigma_tau", std::sqrt(rho_hat)}};
  }

  emit(args.output, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  if (!failed.empty()) {
    std::string list;
    for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
    err << "estimator failure in: " << list << '\n';
    return kEstimatorError;
  }
  return kOk;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  if (args.tau.has_value() == args.optimal_tau) {
    err << "error: give exactly one of --tau or --optimal-tau\n";
    return kInputError;
  }
  SimulationConfig config;
  config.n_units = args.n;
  config.n_replications = args.reps;
  config.true_effect = args.effect;
  config.confidence_level = args.confidence;
  config.master_seed = args.seed;
  config.threads = args.threads;
  config.include_crossfit = args.crossfit;
  config.crossfit_folds = args.folds;

  try {
    const double tau = args.optimal_tau ? optimal_tau(args.rho, args.sigma) : *args.tau;
    config.structure = {args.sigma, tau, args.rho};
    detail::require_feasible(config.structure);
  } catch (const InfeasibleStructure& e) {
    return report_infeasible(err, e);
  } catch (const DegenerateStructure& e) {
    err << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  ReplicationSummary summary;
  try {
    config.validate();
    if (!args.dump_panel.empty()) {
      const auto panel = sample_panel(config, 0);
      emit(args.dump_panel, out, [&](std::ostream& os) { write_frame_csv(os, panel); });
    }
    summary = run_replications(config);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const EstimatorError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimatorError;
  }

  const auto& s = config.structure;
  nlohmann::json report = to_json(summary);
  report["schema"] = kReportSchema;
  report["command"] = "simulate";
  report["optimal_tau"] = args.optimal_tau;
  const auto validation = validate(s);
  report["determinant"] = validation.determinant;
  report["min_eigenvalue"] = validation.min_eigenvalue;
  report["theory"] = {{"basic_over_original", 1.0 - s.rho * s.rho},
                      {"advanced_over_original", 1.0 - s.tau * s.tau}};
  if (std::abs(s.rho) < 1.0) report["theory"]["advanced_over_basic"] = variance_ratio(s);
  if (s.rho >= 0.0 && s.rho < 1.0) report["theory"]["bound"] = theorem_lower_bound(s.rho);
  report["assumption_holds"] = assumption_holds(s);
  report["best_covariate"] = is_best_covariate(s, 1e-9);

  emit(args.output, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  if (!args.csv.empty()) emit(args.csv, out, [&](std::ostream& os) { write_summary_csv(os, summary); });
  return kOk;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  if (args.rho_grid.empty()) {
    err << "error: --rho-grid is empty\n";
    return kInputError;
  }
  if (args.sigma_sqrt_rho == !args.sigma_grid.empty()) {
    err << "error: give exactly one of --sigma-grid or --sigma-sqrt-rho\n";
    return kInputError;
  }
  auto in_range = [](double v) { return v >= 0.0 && v < 1.0; };
  for (double v : args.rho_grid) {
    if (!in_range(v)) {
      err << "error: rho grid value " << v << " outside [0, 1)\n";
      return kInputError;
    }
  }
  for (double v : args.sigma_grid) {
    if (!in_range(v)) {
      err << "error: sigma grid value " << v << " outside [0, 1)\n";
      return kInputError;
    }
  }

  std::vector<std::pair<double, double>> grid;
  for (double rho : args.rho_grid) {
    if (args.sigma_sqrt_rho) {
      grid.emplace_back(rho, std::sqrt(rho));
    } else {
      for (double sigma : args.sigma_grid) grid.emplace_back(rho, sigma);
    }
  }

  SimulationConfig base;
  base.n_units = args.n;
  base.n_replications = args.reps;
  base.true_effect = args.effect;
  base.master_seed = args.seed;
  base.threads = args.threads;

  SweepResult result;
  try {
    base.validate();
    result = sweep_theorem(grid, base);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const EstimatorError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimatorError;
  }

  emit(args.output, out, [&](std::ostream& os) { write_sweep_csv(os, result); });
  if (!args.json.empty()) {
    nlohmann::json report = to_json(result);
    report["schema"] = kReportSchema;
    report["command"] = "sweep";
    report["config"] = {{"n_units", args.n}, {"n_replications", args.reps}, {"true_effect", args.effect},
                        {"master_seed", args.seed}};
    emit(args.json, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  }
  for (const auto& p : result.points) {
    if (!p.feasible) err << "skipped rho=" << p.rho << " sigma=" << p.sigma << ": " << p.note << '\n';
  }
  if (result.feasible_count() == 0) {
    err << "error: every grid point is infeasible\n";
    return kInfeasible;
  }
  return kOk;
}

int cmd_bound(const BoundArgs& args, std::ostream& out, std::ostream& err) {
  double bound = 0, ci = 0;
  try {
    bound = theorem_lower_bound(args.rho);
    ci = max_ci_width_reduction(args.rho);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  const double tight = std::sqrt(args.rho);
  if (args.json) {
    const nlohmann::json j = {{"schema", kReportSchema},
                              {"command", "bound"},
                              {"rho", args.rho},
                              {"bound", bound},
                              {"max_ci_width_reduction", ci},
                              {"tightness_sigma_tau", tight}};
    out << j.dump() << '\n';
  } else {
    out << "rho                     " << format_number(args.rho) << '\n'
        << "variance ratio bound    " << format_number(bound) << '\n'
        << "max CI width reduction  " << format_number(ci) << '\n'
        << "tight at sigma = tau =  " << format_number(tight) << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regression adjustment (CUPED) estimators and variance-reduction bounds", "cuped"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* a = app.add_subcommand("analyze", "Estimate the treatment effect of an experiment CSV");
  a->add_option("input", analyze.input, "CSV: unit_id,arm,y_pre,y_post[,covariates...]")->required();
  a->add_option("--covariates", analyze.covariates, "Columns for multi_ra / crossfit_ra (default: y_pre and all)")
      ->delimiter(',');
  a->add_option("--confidence", analyze.confidence, "Confidence level")->capture_default_str();
  a->add_option("--folds", analyze.folds, "Cross-fitting folds")->capture_default_str();
  a->add_option("--seed", analyze.seed, "Fold assignment seed")->capture_default_str();
  a->add_option("-o,--out", analyze.output, "JSON report path (default stdout)");

  SimulateArgs simulate;
  auto* s = app.add_subcommand("simulate", "Monte Carlo replications at a correlation structure");
  s->add_option("--n", simulate.n, "Units per experiment")->capture_default_str();
  s->add_option("--reps", simulate.reps, "Replications")->capture_default_str();
  s->add_option("--rho", simulate.rho, "cor(Y_pre, Y_post)")->required();
  s->add_option("--sigma", simulate.sigma, "cor(X, Y_pre)")->required();
  s->add_option("--tau", simulate.tau, "cor(X, Y_post)");
  s->add_flag("--optimal-tau", simulate.optimal_tau, "Use tau = rho / sigma");
  s->add_option("--effect", simulate.effect, "True treatment effect")->capture_default_str();
  s->add_option("--seed", simulate.seed, "Master seed")->capture_default_str();
  s->add_option("--confidence", simulate.confidence, "Confidence level")->capture_default_str();
  s->add_option("--threads", simulate.threads, "Worker threads (0 = all cores)")->capture_default_str();
  s->add_flag("--crossfit", simulate.crossfit, "Also run crossfit_ra in each replication");
  s->add_option("--folds", simulate.folds, "Cross-fitting folds")->capture_default_str();
  s->add_option("-o,--out", simulate.output, "JSON summary path (default stdout)");
  s->add_option("--csv", simulate.csv, "CSV summary path");
  s->add_option("--dump-panel", simulate.dump_panel, "Write replication 0 as an experiment CSV");

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "Empirical check of the variance-ratio bound over a grid");
  w->add_option("--rho-grid", sweep.rho_grid, "Comma-separated rho values in [0, 1)")->delimiter(',')->required();
  w->add_option("--sigma-grid", sweep.sigma_grid, "Comma-separated sigma values in [0, 1)")->delimiter(',');
  w->add_flag("--sigma-sqrt-rho", sweep.sigma_sqrt_rho, "Pair each rho with sigma = sqrt(rho)");
  w->add_option("--n", sweep.n, "Units per experiment")->capture_default_str();
  w->add_option("--reps", sweep.reps, "Replications per grid point")->capture_default_str();
  w->add_option("--effect", sweep.effect, "True treatment effect")->capture_default_str();
  w->add_option("--seed", sweep.seed, "Master seed")->capture_default_str();
  w->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)")->capture_default_str();
  w->add_option("-o,--out", sweep.output, "CSV path (default stdout)");
  w->add_option("--json", sweep.json, "JSON path");

  BoundArgs bound;
  auto* b = app.add_subcommand("bound", "Closed-form bound for a given rho");
  b->add_option("--rho", bound.rho, "cor(Y_pre, Y_post) in [0, 1)")->required();
  b->add_flag("--json", bound.json, "Print one JSON line");

  std::vector<const char*> argv{"cuped"};
  for (const auto& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInputError;
  }

  try {
    if (*a) return cmd_analyze(analyze, out, err);
    if (*s) return cmd_simulate(simulate, out, err);
    if (*w) return cmd_sweep(sweep, out, err);
    if (*b) return cmd_bound(bound, out, err);
  } catch (const InfeasibleStructure& e) {
    return report_infeasible(err, e);
  } catch (const EstimatorError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimatorError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace cuped::cli
