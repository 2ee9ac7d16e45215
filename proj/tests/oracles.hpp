#pragma once

// Brute-force reference computations used only by tests. None of these share
// code with the library paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace cuped::oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 correlation_matrix(double sigma, double tau, double rho) {
  return {{{1.0, sigma, tau}, {sigma, 1.0, rho}, {tau, rho, 1.0}}};
}

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes; ascending eigenvalues.
inline std::array<double, 3> jacobi_eigenvalues(Mat3 a) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::array<double, 3> ev{a[0][0], a[1][1], a[2][2]};
  std::sort(ev.begin(), ev.end());
  return ev;
}

struct GridOptimum {
  double a{0};
  double b{0};
  double correlation{0};
};

/// Maximizes a*tau + b*rho over the ellipse a^2 + b^2 + 2ab*sigma = 1 by
/// scanning the direction angle, then repeatedly zooming the scan around the best cell.
inline GridOptimum grid_search_best_combo(double sigma, double tau, double rho) {
  auto eval = [&](double phi) {
    const double u = std::cos(phi), v = std::sin(phi);
    const double scale = 1.0 / std::sqrt(u * u + v * v + 2.0 * u * v * sigma);
    return GridOptimum{u * scale, v * scale, (u * tau + v * rho) * scale};
  };
  constexpr int kCells = 2000;
  double lo = 0.0, hi = 2.0 * std::numbers::pi;
  GridOptimum best = eval(0.0);
  double best_phi = 0.0;
  for (int level = 0; level < 6; ++level) {
    const double step = (hi - lo) / kCells;
    for (int i = 0; i <= kCells; ++i) {
      const double phi = lo + step * i;
      const auto g = eval(phi);
      if (g.correlation > best.correlation) {
        best = g;
        best_phi = phi;
      }
    }
    lo = best_phi - 2.0 * step;
    hi = best_phi + 2.0 * step;
  }
  return best;
}

/// Uniform triple in [-1, 1]^3 whose matrix is PSD (rejection sampling with the Jacobi oracle).
template <typename Rng>
std::array<double, 3> random_feasible_triple(Rng& rng, double max_abs_sigma = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    const double s = u(rng), t = u(rng), r = u(rng);
    if (std::abs(s) > max_abs_sigma) continue;
    if (jacobi_eigenvalues(correlation_matrix(s, t, r))[0] >= 1e-9) return {s, t, r};
  }
}

}  // namespace cuped::oracle
