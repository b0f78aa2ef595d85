#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rescurve/operators.hpp"
#include "rescurve/types.hpp"

namespace rescurve {

enum class SmoothnessKind { holder, exponential, logarithmic };

/// Requested decay class of the exact solution in the singular basis.
struct SmoothnessSpec {
  SmoothnessKind kind{SmoothnessKind::holder};
  double eta{0};    // holder: solution decay exponent, requires eta > 1/2
  double kappa{0};  // exponential / logarithmic rate, requires kappa > 0
  Index n{0};

  void validate() const {
    if (n < 2) throw std::invalid_argument("SmoothnessSpec: n must be at least 2");
    if (kind == SmoothnessKind::holder) {
      if (!(eta > 0.5)) throw std::invalid_argument("SmoothnessSpec: holder requires eta > 1/2");
    } else {
      if (!(kappa > 0)) throw std::invalid_argument("SmoothnessSpec: kappa must be positive");
    }
  }
};

struct NoiseSpec {
  double relative_level{0};      // ||eps|| / ||y_exact||
  std::uint64_t seed{0};
  double off_range_fraction{0};  // share of eps^2 energy outside the operator range

  void validate() const {
    if (!(relative_level >= 0)) throw std::invalid_argument("NoiseSpec: relative_level must be >= 0");
    if (!(off_range_fraction >= 0 && off_range_fraction <= 1))
      throw std::invalid_argument("NoiseSpec: off_range_fraction must lie in [0, 1]");
  }
};

/// Provenance of a problem instance. delta_meas is the norm of the noise
/// component outside the operator range; it enters every residual in
/// quadrature and never decays with alpha.
struct ProblemMeta {
  std::string kind{"custom"};  // holder | exponential | logarithmic | external | custom
  std::optional<double> eta;
  std::optional<double> beta;
  std::optional<double> kappa;
  std::optional<double> mu_star;
  Index n{0};
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_relative;
  double off_range_fraction{0};
  double delta_meas{0};
};

template <class Scalar>
struct Problem {
  Operator<Scalar> op;
  std::optional<VectorX<Scalar>> x_true;
  std::optional<VectorX<Scalar>> y_exact;
  VectorX<Scalar> y_noisy;
  std::optional<Scalar> delta_true;
  ProblemMeta meta;

  /// Norm of the measured datum including the off-range component.
  Scalar data_norm() const {
    return std::sqrt(y_noisy.squaredNorm() + Scalar(meta.delta_meas) * Scalar(meta.delta_meas));
  }
};

/// Supremum Holder smoothness of the model problem solution.
inline double mu_star(double eta, double beta) {
  if (!(eta > 0.5)) throw std::invalid_argument("mu_star: eta must exceed 1/2");
  if (!(beta > 0)) throw std::invalid_argument("mu_star: beta must be positive");
  return (2.0 * eta - 1.0) / (4.0 * beta);
}

/// sigma_i = i^-beta, x_i = i^-eta, y = A x. Noise-free.
template <class Scalar = double>
Problem<Scalar> make_model_problem(double eta, double beta, Index n) {
  if (!(eta > 0.5)) throw std::invalid_argument("make_model_problem: eta must exceed 1/2");
  if (!(beta > 0)) throw std::invalid_argument("make_model_problem: beta must be positive");
  if (n < 2) throw std::invalid_argument("make_model_problem: n must be at least 2");

  VectorX<Scalar> sigma(n), x(n);
  for (Index i = 0; i < n; ++i) {
    const double base = static_cast<double>(i + 1);
    sigma[i] = static_cast<Scalar>(std::pow(base, -beta));
    x[i] = static_cast<Scalar>(std::pow(base, -eta));
  }
  VectorX<Scalar> y = sigma.cwiseProduct(x);

  Problem<Scalar> p{Operator<Scalar>(DiagonalOperator<Scalar>(sigma)), x, y, y, Scalar(0), {}};
  p.meta.kind = "holder";
  p.meta.eta = eta;
  p.meta.beta = beta;
  p.meta.mu_star = mu_star(eta, beta);
  p.meta.n = n;
  return p;
}

namespace detail {

// Squared tail target phi(sigma_k^2)^2 for the generalized source conditions.
// The exponential class uses phi(t) = exp(-t^(-1/kappa)), the index-function
// form whose tails decrease; underflow to zero is treated as a zero tail.
inline double smoothness_tail(SmoothnessKind kind, double kappa, double sigma_k) {
  const double t = sigma_k * sigma_k;
  if (kind == SmoothnessKind::exponential) {
    return std::exp(-2.0 * std::pow(t, -1.0 / kappa));
  }
  // logarithmic: phi(t) = (-log t)^-kappa
  const double l = -std::log(t);
  if (!(l > 0)) return std::numeric_limits<double>::infinity();
  return std::pow(l, -2.0 * kappa);
}

}  // namespace detail

/// Builds sigma_i = i^-beta and solution coefficients by tail telescoping so
/// that sum_{i>=k} x_i^2 equals the requested tail exactly. The first
/// logarithmic coefficient is capped (phi diverges at sigma = 1); the last
/// coefficient absorbs the remainder.
template <class Scalar = double>
Problem<Scalar> make_spectral_problem(const SmoothnessSpec& spec, double beta) {
  spec.validate();
  if (!(beta > 0)) throw std::invalid_argument("make_spectral_problem: beta must be positive");
  if (spec.kind == SmoothnessKind::holder) return make_model_problem<Scalar>(spec.eta, beta, spec.n);

  const Index n = spec.n;
  VectorX<Scalar> sigma(n);
  for (Index i = 0; i < n; ++i) sigma[i] = static_cast<Scalar>(std::pow(static_cast<double>(i + 1), -beta));

  std::vector<double> tail(n + 1, 0.0);
  for (Index k = 1; k < n; ++k) tail[k] = detail::smoothness_tail(spec.kind, spec.kappa, sigma[k]);
  tail[0] = std::isfinite(detail::smoothness_tail(spec.kind, spec.kappa, sigma[0]))
                ? detail::smoothness_tail(spec.kind, spec.kappa, sigma[0])
                : 2.0 * tail[1];
  tail[n] = 0.0;  // last coefficient absorbs the remainder

  VectorX<Scalar> x(n);
  for (Index k = 0; k < n; ++k) {
    const double sq = tail[k] - tail[k + 1];
    if (sq < 0)
      throw std::invalid_argument("make_spectral_problem: nonmonotone tail values");
    x[k] = static_cast<Scalar>(std::sqrt(sq));
  }
  VectorX<Scalar> y = sigma.cwiseProduct(x);

  Problem<Scalar> p{Operator<Scalar>(DiagonalOperator<Scalar>(sigma)), x, y, y, Scalar(0), {}};
  p.meta.kind = spec.kind == SmoothnessKind::exponential ? "exponential" : "logarithmic";
  p.meta.beta = beta;
  p.meta.kappa = spec.kappa;
  p.meta.n = n;
  return p;
}

/// Adds seeded Gaussian noise rescaled so the realized noise level equals
/// relative_level * ||y_exact|| exactly. An off_range_fraction share of the
/// squared noise energy is stored as an orthogonal residual floor
/// (meta.delta_meas) instead of being added to the data vector.
template <class Scalar>
Problem<Scalar> add_noise(const Problem<Scalar>& p, const NoiseSpec& spec) {
  spec.validate();
  if (!p.y_exact) throw std::invalid_argument("add_noise: problem has no exact data");

  Problem<Scalar> out = p;
  out.meta.seed = spec.seed;
  out.meta.noise_relative = spec.relative_level;
  out.meta.off_range_fraction = spec.off_range_fraction;

  if (spec.relative_level == 0) {
    out.y_noisy = *p.y_exact;
    out.delta_true = Scalar(0);
    out.meta.delta_meas = 0;
    return out;
  }

  const Scalar delta_abs = static_cast<Scalar>(spec.relative_level) * p.y_exact->norm();
  const Scalar in_range = delta_abs * std::sqrt(Scalar(1) - Scalar(spec.off_range_fraction));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorX<Scalar> eps(p.y_exact->size());
  for (Index i = 0; i < eps.size(); ++i) eps[i] = static_cast<Scalar>(gauss(rng));
  const Scalar en = eps.norm();
  if (!(en > 0)) throw std::runtime_error("add_noise: degenerate noise draw");
  eps *= in_range / en;

  out.y_noisy = *p.y_exact + eps;
  out.delta_true = delta_abs;
  out.meta.delta_meas = static_cast<double>(delta_abs * std::sqrt(Scalar(spec.off_range_fraction)));
  return out;
}

/// Consistency checks on the stored fields (forward map and noise level).
template <class Scalar>
void validate_problem(const Problem<Scalar>& p) {
  if (p.x_true && p.y_exact) {
    const Scalar mismatch = (p.op.apply(*p.x_true) - *p.y_exact).norm();
    if (mismatch > Scalar(1e-12) * p.y_exact->norm())
      throw std::runtime_error("Problem: y_exact does not match A x_true");
  }
  if (p.y_exact && p.delta_true) {
    const Scalar in_range2 = (p.y_noisy - *p.y_exact).squaredNorm();
    const Scalar realized = std::sqrt(in_range2 + Scalar(p.meta.delta_meas) * Scalar(p.meta.delta_meas));
    if (std::abs(realized - *p.delta_true) > Scalar(1e-12) * std::max(*p.delta_true, Scalar(1e-300)))
      throw std::runtime_error("Problem: stored noise level does not match the data");
  }
}

}  // namespace rescurve
