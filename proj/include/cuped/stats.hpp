#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string_view>

namespace cuped {

/// Pairwise (cascade) summation; the association order depends only on the length.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Unbiased sample variance (divisor n - 1). Requires n >= 2.
double sample_variance(std::span<const double> values);

/// Pearson correlation of two equal-length series. Returns NaN if either is constant.
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Two-sided standard-normal critical value z with P(|Z| <= z) = confidence_level.
double normal_critical_value(double confidence_level);

/// A statistic over replications together with its jackknife standard error.
struct JackknifeEstimate {
  double value{0};
  double std_error{0};
};

/// var(numerator) / var(denominator) over paired replications, with a
/// leave-one-replication-out jackknife standard error.
JackknifeEstimate jackknife_variance_ratio(std::span<const double> numerator,
                                           std::span<const double> denominator);

std::uint64_t splitmix64(std::uint64_t x);

/// Stream seed for replication `index` under `master_seed`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// 64-bit FNV-1a; stable across platforms and standard libraries.
std::uint64_t fnv1a64(std::string_view bytes);

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace cuped
