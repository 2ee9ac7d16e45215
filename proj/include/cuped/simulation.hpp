#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cuped/correlation_model.hpp"
#include "cuped/estimators.hpp"
#include "cuped/frame.hpp"
#include "cuped/stats.hpp"

namespace cuped {

struct SimulationConfig {
  int n_units{2000};
  int n_replications{1000};
  double true_effect{0};
  CorrelationStructured structure;
  double confidence_level{kDefaultConfidence};
  std::uint64_t master_seed{0};
  /// Worker threads for replications; 0 picks the hardware concurrency. Results
  /// do not depend on this value.
  int threads{1};
  /// Also run crossfit_ra (on y_pre and x) in every replication.
  bool include_crossfit{false};
  int crossfit_folds{5};

  /// Throws InvalidArgument or InfeasibleStructure.
  void validate() const;
};

/// Square root A with A A^T = C + jitter * I. Lower triangular unless C is
/// singular enough to need the pivoted fallback.
struct CorrelationFactor {
  Eigen::Matrix3d root;
  double jitter{0};
};

/// Maximum diagonal jitter tried when a boundary-PSD matrix fails to factor.
inline constexpr double kMaxJitter = 1e-10;

CorrelationFactor factor_correlation(const CorrelationStructured& s);

/// One synthetic experiment: n iid Gaussian (x, y_pre, y_post) rows with the
/// configured correlation, exactly n/2 treated by seeded permutation, and
/// true_effect added to treated y_post. Column "x" holds X.
ExperimentFrame sample_panel(const SimulationConfig& config, std::uint64_t replication_index);

struct EstimatorSummary {
  Method method{Method::kDiffInMeans};
  double mean_delta{0};
  double mean_delta_stderr{0};
  /// Variance of delta_hat across replications.
  double empirical_variance{0};
  double mean_reported_variance{0};
  double coverage{0};
  double mean_variance_reduction_factor{0};
};

struct ReplicationSummary {
  SimulationConfig config;
  double jitter{0};
  /// diff_in_means, basic_ra, multi_ra([x]) and optionally crossfit_ra, in that order.
  std::vector<EstimatorSummary> estimators;
  JackknifeEstimate basic_over_original;
  JackknifeEstimate advanced_over_basic;
  JackknifeEstimate advanced_over_original;
  std::optional<JackknifeEstimate> crossfit_over_basic;

  const EstimatorSummary& estimator(Method m) const;
};

ReplicationSummary run_replications(const SimulationConfig& config);

struct SweepPoint {
  double rho{0};
  double sigma{0};
  /// NaN when no tau is consistent with (rho, sigma).
  double tau{0};
  bool feasible{false};
  bool assumption_satisfied{false};
  double theoretical_ratio{0};
  double bound{0};
  /// Monte Carlo var(advanced) / var(basic) and its jackknife standard error.
  double empirical_ratio{0};
  double mc_stderr{0};
  double basic_over_original{0};
  double basic_over_original_stderr{0};
  double advanced_over_original{0};
  double advanced_over_original_stderr{0};
  /// empirical_ratio >= bound - 3 * mc_stderr.
  bool bound_respected{false};
  /// Why the point was skipped, empty when feasible.
  std::string note;
};

struct SweepResult {
  std::vector<SweepPoint> points;

  std::size_t feasible_count() const;
};

/// Tolerance on tau <= sigma used when tau is derived as rho / sigma.
inline constexpr double kAssumptionSlack = 1e-12;

/// For each (rho, sigma) sets tau = rho / sigma (X is the best covariate) and
/// compares the Monte Carlo advanced/basic ratio against 1 / (1 + rho).
/// Infeasible points are kept with feasible = false and a note.
SweepResult sweep_theorem(const std::vector<std::pair<double, double>>& rho_sigma_grid,
                          const SimulationConfig& base_config);

/// Runs the configured structure, which must violate tau <= sigma, and reports
/// how far its ratios fall below 1 / (1 + rho).
SweepResult counterexample_assumption_failure(const SimulationConfig& config);

}  // namespace cuped
