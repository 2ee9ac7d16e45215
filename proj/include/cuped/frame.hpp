#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace cuped {

enum class Arm : std::uint8_t { kControl = 0, kTreatment = 1 };

/// Column-oriented unit-level experiment data.
///
/// Row i is (unit_ids[i], arms[i], y_pre(i), y_post(i), covariates.row(i)); the
/// covariate columns are named by covariate_names in order.
struct ExperimentFrame {
  std::vector<std::string> unit_ids;
  std::vector<Arm> arms;
  Eigen::VectorXd y_pre;
  Eigen::VectorXd y_post;
  Eigen::MatrixXd covariates;
  std::vector<std::string> covariate_names;

  Eigen::Index size() const { return y_post.size(); }

  /// Throws InvalidFrame unless every column has matching length, every value is
  /// finite and each arm holds at least two units.
  void validate() const;

  /// Resolves "y_pre" or a covariate name to its column. Throws InvalidArgument.
  Eigen::VectorXd column(const std::string& name) const;

  bool has_column(const std::string& name) const;

  /// Same frame with rows reordered: result row i is this frame's row order[i].
  ExperimentFrame permuted(const std::vector<Eigen::Index>& order) const;
};

}  // namespace cuped
