#include "cuped/report.hpp"

#include <cmath>
#include <ostream>

#include "cuped/csv_io.hpp"

namespace cuped {
namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json to_json(const JackknifeEstimate& j) {
  return {{"value", number_or_null(j.value)}, {"mc_stderr", number_or_null(j.std_error)}};
}

nlohmann::json to_json(const EstimatorSummary& s) {
  return {{"method", method_tag(s.method)},
          {"mean_delta", s.mean_delta},
          {"mean_delta_stderr", s.mean_delta_stderr},
          {"empirical_variance", s.empirical_variance},
          {"mean_reported_variance", s.mean_reported_variance},
          {"coverage", s.coverage},
          {"mean_variance_reduction_factor", s.mean_variance_reduction_factor}};
}

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

nlohmann::json to_json(const CorrelationStructured& s) {
  return {{"sigma", s.sigma}, {"tau", s.tau}, {"rho", s.rho}};
}

nlohmann::json to_json(const AdjustedEstimate& e) {
  nlohmann::json theta = nlohmann::json::object();
  for (Eigen::Index i = 0; i < e.theta.size(); ++i) {
    theta[e.theta_names[static_cast<std::size_t>(i)]] = e.theta(i);
  }
  return {{"method", method_tag(e.method)},
          {"delta_hat", e.delta_hat},
          {"variance", e.variance},
          {"std_error", e.std_error},
          {"ci_low", e.ci_low},
          {"ci_high", e.ci_high},
          {"confidence_level", e.confidence_level},
          {"theta", theta},
          {"variance_reduction_factor", e.variance_reduction_factor}};
}

nlohmann::json to_json(const ReplicationSummary& summary) {
  const auto& c = summary.config;
  nlohmann::json j;
  j["config"] = {{"n_units", c.n_units},
                 {"n_replications", c.n_replications},
                 {"true_effect", c.true_effect},
                 {"structure", to_json(c.structure)},
                 {"confidence_level", c.confidence_level},
                 {"master_seed", c.master_seed},
                 {"include_crossfit", c.include_crossfit}};
  j["jitter"] = summary.jitter;
  j["estimators"] = nlohmann::json::array();
  for (const auto& e : summary.estimators) j["estimators"].push_back(to_json(e));
  j["ratios"] = {{"basic_over_original", to_json(summary.basic_over_original)},
                 {"advanced_over_basic", to_json(summary.advanced_over_basic)},
                 {"advanced_over_original", to_json(summary.advanced_over_original)}};
  if (summary.crossfit_over_basic) j["ratios"]["crossfit_over_basic"] = to_json(*summary.crossfit_over_basic);
  return j;
}

nlohmann::json to_json(const SweepPoint& p) {
  nlohmann::json j = {{"rho", p.rho},
                      {"sigma", p.sigma},
                      {"tau", number_or_null(p.tau)},
                      {"feasible", p.feasible},
                      {"assumption_satisfied", p.assumption_satisfied},
                      {"theoretical_ratio", number_or_null(p.theoretical_ratio)},
                      {"bound", number_or_null(p.bound)},
                      {"empirical_ratio", number_or_null(p.empirical_ratio)},
                      {"mc_stderr", number_or_null(p.mc_stderr)},
                      {"basic_over_original", number_or_null(p.basic_over_original)},
                      {"basic_over_original_stderr", number_or_null(p.basic_over_original_stderr)},
                      {"advanced_over_original", number_or_null(p.advanced_over_original)},
                      {"advanced_over_original_stderr", number_or_null(p.advanced_over_original_stderr)},
                      {"bound_respected", p.bound_respected}};
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

nlohmann::json to_json(const SweepResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points) points.push_back(to_json(p));
  return {{"points", points}};
}

void write_summary_csv(std::ostream& out, const ReplicationSummary& summary) {
  out << "method,mean_delta,mean_delta_stderr,empirical_variance,mean_reported_variance,coverage,"
         "mean_variance_reduction_factor\n";
  for (const auto& e : summary.estimators) {
    out << method_tag(e.method) << ',' << format_number(e.mean_delta) << ',' << format_number(e.mean_delta_stderr)
        << ',' << format_number(e.empirical_variance) << ',' << format_number(e.mean_reported_variance) << ','
        << format_number(e.coverage) << ',' << format_number(e.mean_variance_reduction_factor) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "rho,sigma,tau,empirical_ratio,theoretical_ratio,bound,mc_stderr,assumption_satisfied,feasible\n";
  for (const auto& p : result.points) {
    out << format_number(p.rho) << ',' << format_number(p.sigma) << ',' << format_number(p.tau) << ','
        << format_number(p.empirical_ratio) << ',' << format_number(p.theoretical_ratio) << ','
        << format_number(p.bound) << ',' << format_number(p.mc_stderr) << ',' << flag(p.assumption_satisfied)
        << ',' << flag(p.feasible) << '\n';
  }
}

}  // namespace cuped
