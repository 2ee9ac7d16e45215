#include "cuped/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "cuped/errors.hpp"
#include "cuped/stats.hpp"

namespace cuped {
namespace {

struct ArmMoments {
  double delta{0};
  double variance{0};
};

// Neyman two-sample difference of arm means on an arbitrary outcome.
ArmMoments two_sample(const std::vector<Arm>& arms, const Eigen::VectorXd& outcome) {
  std::vector<double> treated, control;
  treated.reserve(arms.size());
  control.reserve(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    (arms[i] == Arm::kTreatment ? treated : control).push_back(outcome(static_cast<Eigen::Index>(i)));
  }
  const double nt = static_cast<double>(treated.size());
  const double nc = static_cast<double>(control.size());
  return {mean(treated) - mean(control), sample_variance(treated) / nt + sample_variance(control) / nc};
}

AdjustedEstimate finish(Method method, const ArmMoments& m, double dim_variance, double confidence_level) {
  AdjustedEstimate e;
  e.method = method;
  e.confidence_level = confidence_level;
  e.delta_hat = m.delta;
  e.variance = m.variance;
  e.std_error = std::sqrt(m.variance);
  const double z = normal_critical_value(confidence_level);
  e.ci_low = m.delta - z * e.std_error;
  e.ci_high = m.delta + z * e.std_error;
  e.variance_reduction_factor = dim_variance > 0.0 ? m.variance / dim_variance : 1.0;
  return e;
}

bool is_effectively_constant(const Eigen::VectorXd& centered, const Eigen::VectorXd& raw) {
  const double scale = std::max(1.0, raw.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  return centered.squaredNorm() <= static_cast<double>(raw.size()) * tol * tol;
}

// CUPED on a single covariate: y_post - theta * (x - mean(x)), theta pooled.
AdjustedEstimate single_covariate_ra(const ExperimentFrame& frame, const Eigen::VectorXd& x,
                                     const std::string& name, Method method,
                                     double confidence_level) {
  const double dim_variance = two_sample(frame.arms, frame.y_post).variance;
  const Eigen::VectorXd xc = x.array() - x.mean();
  if (is_effectively_constant(xc, x)) {
    throw ZeroVarianceCovariate(std::string(method_tag(method)) + ": covariate '" + name +
                                "' has zero variance");
  }
  const Eigen::VectorXd yc = frame.y_post.array() - frame.y_post.mean();
  const double theta = xc.dot(yc) / xc.squaredNorm();
  const Eigen::VectorXd adjusted = frame.y_post - theta * xc;

  auto e = finish(method, two_sample(frame.arms, adjusted), dim_variance, confidence_level);
  e.theta = Eigen::VectorXd::Constant(1, theta);
  e.theta_names = {name};
  return e;
}

Eigen::MatrixXd gather_columns(const ExperimentFrame& frame, const std::vector<std::string>& names) {
  Eigen::MatrixXd out(frame.size(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = frame.column(names[j]);
  }
  return out;
}

std::string join(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) s += ", ";
    s += names[i];
  }
  return s;
}

}  // namespace

std::string_view method_tag(Method m) {
  switch (m) {
    case Method::kDiffInMeans: return "diff_in_means";
    case Method::kBasicRa: return "basic_ra";
    case Method::kMultiRa: return "multi_ra";
    case Method::kCrossfitRa: return "crossfit_ra";
  }
  return "unknown";
}

AdjustedEstimate diff_in_means(const ExperimentFrame& frame, double confidence_level) {
  frame.validate();
  const auto m = two_sample(frame.arms, frame.y_post);
  auto e = finish(Method::kDiffInMeans, m, m.variance, confidence_level);
  e.variance_reduction_factor = 1.0;
  return e;
}

AdjustedEstimate basic_ra(const ExperimentFrame& frame, double confidence_level) {
  frame.validate();
  return single_covariate_ra(frame, frame.y_pre, "y_pre", Method::kBasicRa, confidence_level);
}

AdjustedEstimate multi_ra(const ExperimentFrame& frame, const std::vector<std::string>& covariate_names,
                          double confidence_level) {
  frame.validate();
  if (covariate_names.empty()) throw InvalidArgument("multi_ra: no covariates named");
  for (const auto& name : covariate_names) {
    if (!frame.has_column(name)) throw InvalidArgument("multi_ra: unknown covariate '" + name + "'");
  }

  const double dim_variance = two_sample(frame.arms, frame.y_post).variance;
  const Eigen::MatrixXd x = gather_columns(frame, covariate_names);
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd yc = frame.y_post.array() - frame.y_post.mean();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  qr.setThreshold(1e-10);
  if (qr.rank() < xc.cols()) {
    std::vector<std::string> offending;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < xc.cols(); ++k) {
      offending.push_back(covariate_names[static_cast<std::size_t>(perm(k))]);
    }
    throw CollinearCovariates("multi_ra: covariates are collinear; dependent column(s): " + join(offending));
  }
  const Eigen::VectorXd theta = qr.solve(yc);
  const Eigen::VectorXd adjusted = frame.y_post - xc * theta;

  auto e = finish(Method::kMultiRa, two_sample(frame.arms, adjusted), dim_variance, confidence_level);
  e.theta = theta;
  e.theta_names = covariate_names;
  return e;
}

int crossfit_fold(std::string_view unit_id, std::uint64_t seed, int k_folds) {
  return static_cast<int>(splitmix64(fnv1a64(unit_id) ^ splitmix64(seed)) %
                          static_cast<std::uint64_t>(k_folds));
}

AdjustedEstimate crossfit_ra(const ExperimentFrame& frame, const CrossfitOptions& options,
                             double confidence_level) {
  frame.validate();
  if (options.k_folds < 2) throw InvalidArgument("crossfit_ra: k_folds must be >= 2");

  std::vector<std::string> predictors = options.predictor_columns;
  if (predictors.empty()) {
    predictors.emplace_back("y_pre");
    predictors.insert(predictors.end(), frame.covariate_names.begin(), frame.covariate_names.end());
  }
  for (const auto& name : predictors) {
    if (!frame.has_column(name)) throw InvalidArgument("crossfit_ra: unknown predictor '" + name + "'");
  }

  const Eigen::Index n = frame.size();
  const auto p = static_cast<Eigen::Index>(predictors.size());
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = gather_columns(frame, predictors);

  std::vector<int> fold(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> fold_size(static_cast<std::size_t>(options.k_folds), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int f = crossfit_fold(frame.unit_ids[static_cast<std::size_t>(i)], options.seed, options.k_folds);
    fold[static_cast<std::size_t>(i)] = f;
    ++fold_size[static_cast<std::size_t>(f)];
  }
  for (int f = 0; f < options.k_folds; ++f) {
    if (fold_size[static_cast<std::size_t>(f)] < p + 2) {
      throw FoldTooSmall("crossfit_ra: fold " + std::to_string(f) + " has " +
                         std::to_string(fold_size[static_cast<std::size_t>(f)]) + " units, needs at least " +
                         std::to_string(p + 2));
    }
  }

  Eigen::VectorXd prediction(n);
  for (int f = 0; f < options.k_folds; ++f) {
    std::vector<Eigen::Index> train, held_out;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold[static_cast<std::size_t>(i)] == f ? held_out : train).push_back(i);
    }
    const Eigen::MatrixXd x_train = design(train, Eigen::all);
    const Eigen::VectorXd y_train = frame.y_post(train);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x_train);
    qr.setThreshold(1e-10);
    if (qr.rank() < x_train.cols()) {
      throw CollinearCovariates("crossfit_ra: predictor columns are collinear in training folds for fold " +
                                std::to_string(f));
    }
    const Eigen::VectorXd beta = qr.solve(y_train);
    prediction(held_out) = design(held_out, Eigen::all) * beta;
  }

  return single_covariate_ra(frame, prediction, "prediction", Method::kCrossfitRa, confidence_level);
}

CorrelationStructured empirical_correlation(const ExperimentFrame& frame, const std::string& x_column) {
  frame.validate();
  const Eigen::VectorXd x_all = frame.column(x_column);
  std::vector<Eigen::Index> control;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    if (frame.arms[static_cast<std::size_t>(i)] == Arm::kControl) control.push_back(i);
  }
  const Eigen::VectorXd x = x_all(control);
  const Eigen::VectorXd pre = frame.y_pre(control);
  const Eigen::VectorXd post = frame.y_post(control);

  const CorrelationStructured s{pearson(x, pre), pearson(x, post), pearson(pre, post)};
  if (std::isnan(s.sigma) || std::isnan(s.tau) || std::isnan(s.rho)) {
    throw ZeroVarianceCovariate("empirical_correlation: constant series among (" + x_column +
                                ", y_pre, y_post) in the control arm");
  }
  return s;
}

}  // namespace cuped
