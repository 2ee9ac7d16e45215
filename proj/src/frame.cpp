#include "cuped/frame.hpp"

#include <algorithm>

#include "cuped/errors.hpp"

namespace cuped {

void ExperimentFrame::validate() const {
  const auto n = size();
  if (y_pre.size() != n || static_cast<Eigen::Index>(arms.size()) != n ||
      static_cast<Eigen::Index>(unit_ids.size()) != n) {
    throw InvalidFrame("frame columns have mismatched lengths");
  }
  if (covariates.rows() != n || covariates.cols() != static_cast<Eigen::Index>(covariate_names.size())) {
    throw InvalidFrame("covariate matrix does not match frame length or covariate names");
  }
  if (!y_pre.allFinite() || !y_post.allFinite() || !covariates.allFinite()) {
    throw InvalidFrame("frame contains non-finite values");
  }
  const auto treated = std::count(arms.begin(), arms.end(), Arm::kTreatment);
  if (treated < 2 || n - treated < 2) {
    throw InvalidFrame("each arm needs at least 2 units (treatment=" + std::to_string(treated) +
                       ", control=" + std::to_string(n - treated) + ")");
  }
}

bool ExperimentFrame::has_column(const std::string& name) const {
  return name == "y_pre" ||
         std::find(covariate_names.begin(), covariate_names.end(), name) != covariate_names.end();
}

Eigen::VectorXd ExperimentFrame::column(const std::string& name) const {
  if (name == "y_pre") return y_pre;
  const auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end()) {
    throw InvalidArgument("unknown column '" + name + "'");
  }
  return covariates.col(it - covariate_names.begin());
}

ExperimentFrame ExperimentFrame::permuted(const std::vector<Eigen::Index>& order) const {
  ExperimentFrame out;
  const auto n = static_cast<Eigen::Index>(order.size());
  out.covariate_names = covariate_names;
  out.unit_ids.reserve(order.size());
  out.arms.reserve(order.size());
  out.y_pre.resize(n);
  out.y_post.resize(n);
  out.covariates.resize(n, covariates.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = order[static_cast<std::size_t>(i)];
    out.unit_ids.push_back(unit_ids[static_cast<std::size_t>(src)]);
    out.arms.push_back(arms[static_cast<std::size_t>(src)]);
    out.y_pre(i) = y_pre(src);
    out.y_post(i) = y_post(src);
    out.covariates.row(i) = covariates.row(src);
  }
  return out;
}

}  // namespace cuped
