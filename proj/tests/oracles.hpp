// Independent reference computations used by the test suites. These stay
// deliberately separate from the library implementation paths they check:
// the Tikhonov reference solves the assembled normal equations by full-pivot
// elimination, and the regression helpers run on raw uncentered sums.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "rescurve/types.hpp"

namespace oracle {

using rescurve::Index;
using rescurve::MatrixX;
using rescurve::VectorX;

/// Reference Tikhonov solution: assemble (A^T A + alpha I) and eliminate.
inline VectorX<double> direct_tikhonov(const MatrixX<double>& a, const VectorX<double>& y, double alpha) {
  const Eigen::MatrixXd m =
      a.transpose() * a + alpha * Eigen::MatrixXd::Identity(a.cols(), a.cols());
  return Eigen::FullPivLU<Eigen::MatrixXd>(m).solve(a.transpose() * y);
}

struct LineFit {
  double slope;
  double intercept;
};

/// Plain least-squares line through (x, y).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// Log-log slope of r over the alpha window [amin, amax].
inline double loglog_slope(const std::vector<double>& alpha, const std::vector<double>& r, double amin,
                           double amax) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] >= amin * (1 - 1e-9) && alpha[i] <= amax * (1 + 1e-9)) {
      lx.push_back(std::log(alpha[i]));
      ly.push_back(std::log(r[i]));
    }
  }
  return fit_line(lx, ly).slope;
}

/// Brute-force tail sum  sum_{i >= k} i^(-2 eta), 1-based k.
inline double tail_sum(double eta, Index k, Index n) {
  double s = 0;
  for (Index i = n; i >= k; --i) s += std::pow(static_cast<double>(i), -2.0 * eta);
  return s;
}

inline MatrixX<double> random_matrix(Index m, Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixX<double> a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = gauss(rng);
  return a;
}

inline VectorX<double> random_vector(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorX<double> v(n);
  for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

}  // namespace oracle
