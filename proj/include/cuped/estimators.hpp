#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cuped/correlation_model.hpp"
#include "cuped/frame.hpp"

namespace cuped {

enum class Method { kDiffInMeans, kBasicRa, kMultiRa, kCrossfitRa };

std::string_view method_tag(Method m);

/// Average treatment effect estimate with a normal-theory confidence interval.
struct AdjustedEstimate {
  Method method{Method::kDiffInMeans};
  double delta_hat{0};
  double variance{0};
  double std_error{0};
  double ci_low{0};
  double ci_high{0};
  double confidence_level{0.95};
  /// Adjustment coefficients, ordered like theta_names. Empty for diff_in_means.
  Eigen::VectorXd theta;
  std::vector<std::string> theta_names;
  /// variance / variance(diff_in_means) on the same frame. Not clamped to [0, 1].
  double variance_reduction_factor{1};
};

inline constexpr double kDefaultConfidence = 0.95;

AdjustedEstimate diff_in_means(const ExperimentFrame& frame,
                               double confidence_level = kDefaultConfidence);

/// CUPED on y_pre with theta = cov(y_pre, y_post) / var(y_pre) pooled over both arms.
AdjustedEstimate basic_ra(const ExperimentFrame& frame,
                          double confidence_level = kDefaultConfidence);

/// Pooled least-squares adjustment on the named columns ("y_pre" or covariate names).
AdjustedEstimate multi_ra(const ExperimentFrame& frame,
                          const std::vector<std::string>& covariate_names,
                          double confidence_level = kDefaultConfidence);

struct CrossfitOptions {
  int k_folds{5};
  std::uint64_t seed{0};
  /// Columns fed to the per-fold linear predictor; empty means y_pre plus every covariate.
  std::vector<std::string> predictor_columns;
};

/// Fold index of a unit: depends only on its id, the seed and k.
int crossfit_fold(std::string_view unit_id, std::uint64_t seed, int k_folds);

/// Cross-fitted prediction adjustment: each unit's out-of-fold OLS prediction of
/// y_post becomes the single covariate of a CUPED regression.
AdjustedEstimate crossfit_ra(const ExperimentFrame& frame, const CrossfitOptions& options,
                             double confidence_level = kDefaultConfidence);

/// Pearson (sigma, tau, rho) of (x_column, y_pre, y_post) over control units.
CorrelationStructured empirical_correlation(const ExperimentFrame& frame,
                                            const std::string& x_column);

}  // namespace cuped
