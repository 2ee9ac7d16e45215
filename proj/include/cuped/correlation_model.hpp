#pragma once

// Closed-form calculus over the correlation matrix of (X, Y_pre, Y_post):
//
//     | 1      sigma  tau   |
//     | sigma  1      rho   |
//     | tau    rho    1     |
//
// sigma = cor(X, Y_pre), tau = cor(X, Y_post), rho = cor(Y_pre, Y_post).
// Everything here is a pure function of its arguments.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cuped/errors.hpp"

namespace cuped {

/// Minimum eigenvalue accepted as positive semidefinite.
inline constexpr double kPsdTolerance = 1e-10;

template <typename Scalar>
struct CorrelationStructure {
  Scalar sigma{0};
  Scalar tau{0};
  Scalar rho{0};

  using Matrix = Eigen::Matrix<Scalar, 3, 3>;

  /// The implied symmetric matrix with unit diagonal, ordered (X, Y_pre, Y_post).
  Matrix matrix() const {
    Matrix m;
    m << Scalar(1), sigma, tau,
         sigma, Scalar(1), rho,
         tau, rho, Scalar(1);
    return m;
  }
};

using CorrelationStructured = CorrelationStructure<double>;

template <typename Scalar>
struct ValidationReport {
  bool feasible{false};
  Scalar determinant{0};
  Scalar min_eigenvalue{0};
  std::vector<std::string> violations;
};

/// a*X + b*Y_pre, normalized so that a^2 + b^2 + 2ab*sigma = 1.
template <typename Scalar>
struct ComboWeights {
  Scalar a{0};
  Scalar b{0};
};

template <typename Scalar>
struct BestCombo {
  ComboWeights<Scalar> weights;
  Scalar achieved_correlation{0};
};

namespace detail {

template <typename Scalar>
bool in_unit_interval(Scalar v) {
  return v >= Scalar(-1) && v <= Scalar(1);  // false for NaN
}

template <typename Scalar>
void require_feasible(const CorrelationStructure<Scalar>& s);

}  // namespace detail

template <typename Scalar>
Scalar determinant(const CorrelationStructure<Scalar>& s) {
  return Scalar(1) + Scalar(2) * s.sigma * s.tau * s.rho - s.sigma * s.sigma -
         s.tau * s.tau - s.rho * s.rho;
}

template <typename Scalar>
ValidationReport<Scalar> validate(const CorrelationStructure<Scalar>& s) {
  ValidationReport<Scalar> report;
  if (!detail::in_unit_interval(s.sigma)) report.violations.emplace_back("sigma_out_of_range");
  if (!detail::in_unit_interval(s.tau)) report.violations.emplace_back("tau_out_of_range");
  if (!detail::in_unit_interval(s.rho)) report.violations.emplace_back("rho_out_of_range");

  report.determinant = determinant(s);
  const auto m = s.matrix();
  if (m.allFinite()) {
    Eigen::SelfAdjointEigenSolver<typename CorrelationStructure<Scalar>::Matrix> solver;
    solver.computeDirect(m, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = solver.eigenvalues().minCoeff();
    if (!(report.min_eigenvalue >= Scalar(-kPsdTolerance))) {
      report.violations.emplace_back("not_positive_semidefinite");
    }
  } else {
    report.min_eigenvalue = std::numeric_limits<Scalar>::quiet_NaN();
    report.violations.emplace_back("not_positive_semidefinite");
  }
  report.feasible = report.violations.empty();
  return report;
}

/// Assumption that X predicts Y_post no better than it predicts Y_pre: tau <= sigma.
template <typename Scalar>
bool assumption_holds(const CorrelationStructure<Scalar>& s) {
  detail::require_feasible(s);
  return s.tau <= s.sigma;
}

/// X is the best covariate (no a*X + b*Y_pre beats X alone) iff rho = sigma*tau.
template <typename Scalar>
bool is_best_covariate(const CorrelationStructure<Scalar>& s, Scalar tol) {
  detail::require_feasible(s);
  return std::abs(s.rho - s.sigma * s.tau) <= tol;
}

/// Maximizes cov(aX + bY_pre, Y_post) subject to var(aX + bY_pre) = 1.
///
/// The optimum direction is Sxx^{-1} c with Sxx = [[1, sigma], [sigma, 1]] and
/// c = (tau, rho); its b-component is proportional to rho - sigma*tau, so the
/// solution is (1, 0) exactly when X is the best covariate. The sign is chosen so
/// that the achieved correlation is nonnegative.
template <typename Scalar>
BestCombo<Scalar> best_linear_combo(const CorrelationStructure<Scalar>& s) {
  detail::require_feasible(s);
  const Scalar one_minus_sigma2 = Scalar(1) - s.sigma * s.sigma;
  if (!(one_minus_sigma2 > Scalar(0))) {
    throw DegenerateStructure("best_linear_combo: X and Y_pre are perfectly collinear (sigma^2 = 1)");
  }

  Eigen::Matrix<Scalar, 2, 1> dir(s.tau - s.sigma * s.rho, s.rho - s.sigma * s.tau);
  if (dir.squaredNorm() == Scalar(0)) {
    // Y_post is uncorrelated with both; every unit-variance combination attains 0.
    return {{Scalar(1), Scalar(0)}, Scalar(0)};
  }
  const Scalar var = dir(0) * dir(0) + dir(1) * dir(1) + Scalar(2) * dir(0) * dir(1) * s.sigma;
  dir /= std::sqrt(var);

  Scalar achieved = dir(0) * s.tau + dir(1) * s.rho;
  if (achieved < Scalar(0)) {
    dir = -dir;
    achieved = -achieved;
  }
  return {{dir(0), dir(1)}, achieved};
}

/// Multiple correlation R^2 of Y_post on (X, Y_pre).
template <typename Scalar>
Scalar multiple_correlation_squared(const CorrelationStructure<Scalar>& s) {
  const Scalar one_minus_sigma2 = Scalar(1) - s.sigma * s.sigma;
  if (!(one_minus_sigma2 > Scalar(0))) {
    throw DegenerateStructure("multiple_correlation_squared: sigma^2 = 1");
  }
  return (s.tau * s.tau + s.rho * s.rho - Scalar(2) * s.sigma * s.tau * s.rho) / one_minus_sigma2;
}

/// var(advanced) / var(basic) = (1 - tau^2) / (1 - rho^2).
template <typename Scalar>
Scalar variance_ratio(const CorrelationStructure<Scalar>& s) {
  if (!(std::abs(s.rho) < Scalar(1))) {
    throw DegenerateStructure("variance_ratio: |rho| must be < 1");
  }
  return (Scalar(1) - s.tau * s.tau) / (Scalar(1) - s.rho * s.rho);
}

/// Lowest attainable var(advanced) / var(basic) when X is the best covariate and tau <= sigma.
template <typename Scalar>
Scalar theorem_lower_bound(Scalar rho) {
  if (!(rho >= Scalar(0) && rho < Scalar(1))) {
    throw InvalidArgument("theorem_lower_bound: rho must lie in [0, 1)");
  }
  return Scalar(1) / (Scalar(1) + rho);
}

/// Largest extra confidence-interval width reduction, 1 - sqrt(1 / (1 + rho)).
template <typename Scalar>
Scalar max_ci_width_reduction(Scalar rho) {
  if (!(rho >= Scalar(0) && rho <= Scalar(1))) {
    throw InvalidArgument("max_ci_width_reduction: rho must lie in [0, 1]");
  }
  return Scalar(1) - std::sqrt(Scalar(1) / (Scalar(1) + rho));
}

/// tau = rho / sigma, the only tau for which X is the best covariate.
/// sigma = rho = 0 resolves to tau = 0.
template <typename Scalar>
Scalar optimal_tau(Scalar rho, Scalar sigma) {
  if (!(rho >= Scalar(0) && rho <= Scalar(1))) {
    throw InvalidArgument("optimal_tau: rho must lie in [0, 1]");
  }
  if (!(sigma >= Scalar(0) && sigma <= Scalar(1))) {
    throw InvalidArgument("optimal_tau: sigma must lie in [0, 1]");
  }
  if (sigma == Scalar(0)) {
    if (rho == Scalar(0)) return Scalar(0);
    throw DegenerateStructure("optimal_tau: sigma = 0 with rho > 0 admits no consistent tau");
  }
  const Scalar tau = rho / sigma;
  const CorrelationStructure<Scalar> s{sigma, tau, rho};
  if (tau > Scalar(1)) {
    const auto report = validate(s);
    throw InfeasibleStructure("optimal_tau: rho / sigma > 1 is not a correlation",
                              static_cast<double>(report.determinant),
                              static_cast<double>(report.min_eigenvalue));
  }
  detail::require_feasible(s);
  return tau;
}

template <typename Scalar>
void detail::require_feasible(const CorrelationStructure<Scalar>& s) {
  const auto report = validate(s);
  if (!report.feasible) {
    std::string msg = "infeasible correlation structure (";
    for (std::size_t i = 0; i < report.violations.size(); ++i) {
      if (i) msg += ", ";
      msg += report.violations[i];
    }
    msg += ")";
    throw InfeasibleStructure(msg, static_cast<double>(report.determinant),
                              static_cast<double>(report.min_eigenvalue));
  }
}

}  // namespace cuped
