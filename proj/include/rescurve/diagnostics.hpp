#pragma once

#include <cmath>
#include <stdexcept>

#include "rescurve/problems.hpp"
#include "rescurve/types.hpp"

namespace rescurve {

template <class Scalar>
struct ResidualSplit {
  Scalar approx_norm{0};  // filtered exact-data part of the residual
  Scalar noise_norm{0};   // filtered noise part, off-range floor included
};

/// Splits the residual into the data-approximation and noise filter sums.
/// The triangle inequality |r(alpha) - approx_norm| <= noise_norm holds.
template <class Scalar>
ResidualSplit<Scalar> residual_decomposition(const Problem<Scalar>& p, Scalar alpha) {
  if (!p.op.is_diagonal()) throw std::invalid_argument("residual_decomposition: requires a diagonal operator");
  if (!p.x_true || !p.y_exact) throw std::invalid_argument("residual_decomposition: ground truth missing");
  if (!(alpha > 0)) throw std::invalid_argument("residual_decomposition: alpha must be positive");

  const VectorX<Scalar>& sigma = p.op.diagonal().singular_values();
  const auto denom = (sigma.array().square() + alpha).eval();
  const VectorX<Scalar> eps = p.y_noisy - *p.y_exact;

  ResidualSplit<Scalar> out;
  out.approx_norm = (sigma.array() * alpha / denom * p.x_true->array()).matrix().norm();
  const Scalar noise2 = (alpha / denom * eps.array()).matrix().squaredNorm();
  out.noise_norm = std::sqrt(noise2 + Scalar(p.meta.delta_meas) * Scalar(p.meta.delta_meas));
  return out;
}

/// sum_i sigma_i^q lambda^2 / (sigma_i^p + lambda)^2 <x, v_i>^2 over the
/// stored spectrum.
template <class Scalar>
Scalar lemma_sum(const Problem<Scalar>& p, double q_exp, double p_exp, Scalar lambda) {
  if (!p.op.is_diagonal()) throw std::invalid_argument("lemma_sum: requires a diagonal operator");
  if (!p.x_true) throw std::invalid_argument("lemma_sum: ground truth missing");
  if (!(lambda > 0)) throw std::invalid_argument("lemma_sum: lambda must be positive");

  const VectorX<Scalar>& sigma = p.op.diagonal().singular_values();
  const VectorX<Scalar>& x = *p.x_true;
  Scalar sum = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    const Scalar sq = std::pow(sigma[i], Scalar(q_exp));
    const Scalar sp = std::pow(sigma[i], Scalar(p_exp));
    const Scalar f = lambda / (sp + lambda);
    sum += sq * f * f * x[i] * x[i];
  }
  return sum;
}

/// (sum_{i<=k} sigma_i^{q-2p} <x, v_i>^2) / sigma_k^{q+4mu-2p}; bounded in k
/// exactly when the tail sums decay like sigma_k^{4mu}. k is 1-based.
template <class Scalar>
Scalar tail_sum_ratio(const Problem<Scalar>& p, Index k, double q_exp, double p_exp, double mu) {
  if (!p.op.is_diagonal()) throw std::invalid_argument("tail_sum_ratio: requires a diagonal operator");
  if (!p.x_true) throw std::invalid_argument("tail_sum_ratio: ground truth missing");
  if (!(q_exp + 4.0 * mu - 2.0 * p_exp < 0))
    throw std::invalid_argument("tail_sum_ratio: requires q + 4 mu - 2 p < 0");
  const VectorX<Scalar>& sigma = p.op.diagonal().singular_values();
  if (k < 1 || k > sigma.size()) throw std::invalid_argument("tail_sum_ratio: k out of range");

  const VectorX<Scalar>& x = *p.x_true;
  const double e = q_exp - 2.0 * p_exp;
  Scalar num = 0;
  for (Index i = 0; i < k; ++i) num += std::pow(sigma[i], Scalar(e)) * x[i] * x[i];
  const Scalar den = std::pow(sigma[k - 1], Scalar(q_exp + 4.0 * mu - 2.0 * p_exp));
  return num / den;
}

}  // namespace rescurve
