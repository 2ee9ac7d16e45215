#include "cuped/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "cuped/errors.hpp"

namespace cuped {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Outcome {
  double delta{0};
  double variance{0};
  double vrf{0};
  bool covered{false};
};

struct Draw {
  std::vector<Outcome> outcomes;
};

Outcome summarize(const AdjustedEstimate& e, double true_effect) {
  return {e.delta_hat, e.variance, e.variance_reduction_factor,
          e.ci_low <= true_effect && true_effect <= e.ci_high};
}

Draw run_one(const SimulationConfig& config, std::uint64_t index) {
  const ExperimentFrame frame = sample_panel(config, index);
  Draw d;
  d.outcomes.push_back(summarize(diff_in_means(frame, config.confidence_level), config.true_effect));
  d.outcomes.push_back(summarize(basic_ra(frame, config.confidence_level), config.true_effect));
  d.outcomes.push_back(summarize(multi_ra(frame, {"x"}, config.confidence_level), config.true_effect));
  if (config.include_crossfit) {
    CrossfitOptions opts;
    opts.k_folds = config.crossfit_folds;
    opts.seed = derive_seed(config.master_seed, index);
    d.outcomes.push_back(summarize(crossfit_ra(frame, opts, config.confidence_level), config.true_effect));
  }
  return d;
}

std::vector<Draw> run_all(const SimulationConfig& config) {
  const auto reps = static_cast<std::size_t>(config.n_replications);
  std::vector<Draw> draws(reps);
  std::vector<std::exception_ptr> errors(reps);

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, reps));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < reps; i = next++) {
      try {
        draws[i] = run_one(config, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  // Report the lowest failing index so the error does not depend on scheduling.
  for (std::size_t i = 0; i < reps; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw ReplicationFailure("replication " + std::to_string(i) + ": " + e.what(),
                               static_cast<long long>(i));
    }
  }
  return draws;
}

EstimatorSummary aggregate(Method method, const std::vector<Draw>& draws, std::size_t slot,
                           std::vector<double>& deltas) {
  const std::size_t n = draws.size();
  std::vector<double> variances(n), vrfs(n), covered(n);
  deltas.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = draws[i].outcomes[slot];
    deltas[i] = o.delta;
    variances[i] = o.variance;
    vrfs[i] = o.vrf;
    covered[i] = o.covered ? 1.0 : 0.0;
  }
  EstimatorSummary s;
  s.method = method;
  s.mean_delta = mean(deltas);
  s.empirical_variance = n >= 2 ? sample_variance(deltas) : 0.0;
  s.mean_delta_stderr = std::sqrt(s.empirical_variance / static_cast<double>(n));
  s.mean_reported_variance = mean(variances);
  s.coverage = mean(covered);
  s.mean_variance_reduction_factor = mean(vrfs);
  return s;
}

JackknifeEstimate ratio_or_nan(std::span<const double> num, std::span<const double> den) {
  if (num.size() < 3) return {kNaN, kNaN};
  return jackknife_variance_ratio(num, den);
}

void fill_empirical(SweepPoint& p, const ReplicationSummary& summary) {
  p.empirical_ratio = summary.advanced_over_basic.value;
  p.mc_stderr = summary.advanced_over_basic.std_error;
  p.basic_over_original = summary.basic_over_original.value;
  p.basic_over_original_stderr = summary.basic_over_original.std_error;
  p.advanced_over_original = summary.advanced_over_original.value;
  p.advanced_over_original_stderr = summary.advanced_over_original.std_error;
  p.bound_respected = p.empirical_ratio >= p.bound - 3.0 * p.mc_stderr;
}

}  // namespace

void SimulationConfig::validate() const {
  if (n_units < 20 || n_units % 2 != 0) {
    throw InvalidArgument("n_units must be even and >= 20 (got " + std::to_string(n_units) + ")");
  }
  if (n_replications < 1) throw InvalidArgument("n_replications must be >= 1");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw InvalidArgument("confidence_level must lie in (0, 1)");
  }
  if (!std::isfinite(true_effect)) throw InvalidArgument("true_effect must be finite");
  if (include_crossfit && crossfit_folds < 2) throw InvalidArgument("crossfit_folds must be >= 2");
  detail::require_feasible(structure);
}

CorrelationFactor factor_correlation(const CorrelationStructured& s) {
  detail::require_feasible(s);
  const Eigen::Matrix3d c = s.matrix();
  for (double jitter : {0.0, kMaxJitter}) {
    const Eigen::Matrix3d m = c + jitter * Eigen::Matrix3d::Identity();
    Eigen::LLT<Eigen::Matrix3d> llt(m);
    if (llt.info() == Eigen::Success) {
      return {llt.matrixL(), jitter};
    }
  }
  // Rank-deficient but PSD (e.g. sigma = 1): LDLT with pivoting still yields a square root.
  Eigen::LDLT<Eigen::Matrix3d> ldlt(c);
  if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() >= -kPsdTolerance).all()) {
    const Eigen::Vector3d d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Eigen::Matrix3d l = ldlt.matrixL();
    l = ldlt.transpositionsP().transpose() * (l * d.asDiagonal());
    return {l, 0.0};
  }
  const auto report = validate(s);
  throw InfeasibleStructure("correlation matrix could not be factored within jitter " +
                                std::to_string(kMaxJitter),
                            report.determinant, report.min_eigenvalue);
}

ExperimentFrame sample_panel(const SimulationConfig& config, std::uint64_t replication_index) {
  config.validate();
  const auto factor = factor_correlation(config.structure);
  const auto n = static_cast<Eigen::Index>(config.n_units);

  std::mt19937_64 rng(derive_seed(config.master_seed, replication_index));
  std::normal_distribution<double> normal;

  Eigen::Matrix<double, Eigen::Dynamic, 3> z(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) z(i, j) = normal(rng);
  }
  const Eigen::Matrix<double, Eigen::Dynamic, 3> draws = z * factor.root.transpose();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  ExperimentFrame frame;
  frame.unit_ids.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) frame.unit_ids.push_back("u" + std::to_string(i));
  frame.arms.assign(static_cast<std::size_t>(n), Arm::kControl);
  for (Eigen::Index k = 0; k < n / 2; ++k) frame.arms[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = Arm::kTreatment;

  frame.covariates = draws.col(0);
  frame.covariate_names = {"x"};
  frame.y_pre = draws.col(1);
  frame.y_post = draws.col(2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (frame.arms[static_cast<std::size_t>(i)] == Arm::kTreatment) frame.y_post(i) += config.true_effect;
  }
  return frame;
}

const EstimatorSummary& ReplicationSummary::estimator(Method m) const {
  for (const auto& e : estimators) {
    if (e.method == m) return e;
  }
  throw InvalidArgument("replication summary has no entry for " + std::string(method_tag(m)));
}

ReplicationSummary run_replications(const SimulationConfig& config) {
  config.validate();
  ReplicationSummary summary;
  summary.config = config;
  summary.jitter = factor_correlation(config.structure).jitter;

  const auto draws = run_all(config);

  std::vector<Method> methods{Method::kDiffInMeans, Method::kBasicRa, Method::kMultiRa};
  if (config.include_crossfit) methods.push_back(Method::kCrossfitRa);
  std::vector<std::vector<double>> deltas(methods.size());
  for (std::size_t k = 0; k < methods.size(); ++k) {
    summary.estimators.push_back(aggregate(methods[k], draws, k, deltas[k]));
  }

  summary.basic_over_original = ratio_or_nan(deltas[1], deltas[0]);
  summary.advanced_over_basic = ratio_or_nan(deltas[2], deltas[1]);
  summary.advanced_over_original = ratio_or_nan(deltas[2], deltas[0]);
  if (config.include_crossfit) summary.crossfit_over_basic = ratio_or_nan(deltas[3], deltas[1]);
  return summary;
}

std::size_t SweepResult::feasible_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const SweepPoint& p) { return p.feasible; }));
}

SweepResult sweep_theorem(const std::vector<std::pair<double, double>>& rho_sigma_grid,
                          const SimulationConfig& base_config) {
  SweepResult result;
  for (const auto& [rho, sigma] : rho_sigma_grid) {
    SweepPoint p;
    p.rho = rho;
    p.sigma = sigma;
    p.tau = p.theoretical_ratio = p.bound = kNaN;
    p.empirical_ratio = p.mc_stderr = kNaN;
    p.basic_over_original = p.basic_over_original_stderr = kNaN;
    p.advanced_over_original = p.advanced_over_original_stderr = kNaN;
    try {
      if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("rho must lie in [0, 1)");
      p.tau = optimal_tau(rho, sigma);
      p.feasible = true;
    } catch (const Error& e) {
      p.note = e.what();
      result.points.push_back(p);
      continue;
    }
    const CorrelationStructured s{sigma, p.tau, rho};
    p.assumption_satisfied = p.tau <= sigma + kAssumptionSlack;
    p.theoretical_ratio = variance_ratio(s);
    p.bound = theorem_lower_bound(rho);

    SimulationConfig config = base_config;
    config.structure = s;
    fill_empirical(p, run_replications(config));
    result.points.push_back(p);
  }
  return result;
}

SweepResult counterexample_assumption_failure(const SimulationConfig& config) {
  const auto& s = config.structure;
  detail::require_feasible(s);
  if (s.tau <= s.sigma) {
    throw InvalidArgument("not a counterexample: tau <= sigma satisfies the assumption");
  }
  if (!(s.rho >= 0.0 && s.rho < 1.0)) throw InvalidArgument("counterexample needs rho in [0, 1)");

  SweepPoint p;
  p.rho = s.rho;
  p.sigma = s.sigma;
  p.tau = s.tau;
  p.feasible = true;
  p.assumption_satisfied = false;
  p.theoretical_ratio = variance_ratio(s);
  p.bound = theorem_lower_bound(s.rho);
  fill_empirical(p, run_replications(config));

  SweepResult result;
  result.points.push_back(p);
  return result;
}

}  // namespace cuped
