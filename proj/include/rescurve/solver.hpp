#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rescurve/problems.hpp"
#include "rescurve/types.hpp"

namespace rescurve {

/// Geometric grid alpha_i = alpha0 * ratio^(i-1), i = 1..steps, decreasing.
struct AlphaGrid {
  double alpha0{1.0};
  double ratio{0.7943282347242815};  // 10^-0.1, ten points per decade
  int steps{121};

  void validate() const {
    if (!(alpha0 > 0)) throw std::invalid_argument("AlphaGrid: alpha0 must be positive");
    if (!(ratio > 0 && ratio < 1)) throw std::invalid_argument("AlphaGrid: ratio must lie in (0, 1)");
    if (steps < 1) throw std::invalid_argument("AlphaGrid: steps must be at least 1");
  }

  std::vector<double> values() const {
    validate();
    std::vector<double> v(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) v[static_cast<std::size_t>(i)] = alpha0 * std::pow(ratio, i);
    return v;
  }
};

template <class Scalar>
struct TikhonovPoint {
  Scalar alpha{0};
  VectorX<Scalar> x;
  Scalar residual_norm{0};  // ||A x - y_delta||, off-range floor included in quadrature
  Scalar solution_norm{0};
  Scalar gradient_norm{0};  // ||A^T (A x - y_delta)||, evaluated via the stationarity identity
  bool converged{true};
  int iterations{0};
};

template <class Scalar>
struct Sweep {
  AlphaGrid grid;
  std::vector<TikhonovPoint<Scalar>> points;  // ordered by decreasing alpha
  Scalar data_norm{0};                        // ||y_delta|| including the off-range component
  ProblemMeta meta;
};

/// Closed-form Tikhonov minimizer for diagonal operators:
/// x_i = sigma_i y_i / (sigma_i^2 + alpha).
template <class Scalar>
TikhonovPoint<Scalar> tikhonov_spectral(const Problem<Scalar>& p, Scalar alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("tikhonov_spectral: alpha must be positive");
  if (!p.op.is_diagonal()) throw std::invalid_argument("tikhonov_spectral: requires a diagonal operator");

  const VectorX<Scalar>& sigma = p.op.diagonal().singular_values();
  const auto denom = (sigma.array().square() + alpha).matrix().eval();

  TikhonovPoint<Scalar> out;
  out.alpha = alpha;
  out.x = sigma.cwiseProduct(p.y_noisy).cwiseQuotient(denom);
  const VectorX<Scalar> res = (alpha * p.y_noisy.array() / denom.array()).matrix();
  const VectorX<Scalar> grad = sigma.cwiseProduct(res);
  const Scalar floor2 = Scalar(p.meta.delta_meas) * Scalar(p.meta.delta_meas);
  out.residual_norm = std::sqrt(res.squaredNorm() + floor2);
  out.solution_norm = out.x.norm();
  out.gradient_norm = grad.norm();
  return out;
}

struct CgOptions {
  double tol{1e-10};  // relative normal-equation residual target
  int maxit{5000};
};

namespace detail {

// Plain CG on (A^T A + shift I) x = b, warm-started from x. Returns iterations.
template <class Scalar>
int cg_single_shift(const Operator<Scalar>& op, const VectorX<Scalar>& b, Scalar shift,
                    VectorX<Scalar>& x, Scalar tol_abs, int maxit) {
  auto normal_apply = [&](const VectorX<Scalar>& v) -> VectorX<Scalar> {
    return op.apply_adjoint(op.apply(v)) + shift * v;
  };
  VectorX<Scalar> r = b - normal_apply(x);
  Scalar rho = r.squaredNorm();
  if (std::sqrt(rho) <= tol_abs) return 0;
  VectorX<Scalar> p = r;
  int k = 0;
  for (; k < maxit; ++k) {
    const VectorX<Scalar> w = normal_apply(p);
    const Scalar pw = p.dot(w);
    if (!(pw > 0) || !std::isfinite(pw)) break;
    const Scalar step = rho / pw;
    x += step * p;
    if ((k + 1) % 50 == 0) {
      r = b - normal_apply(x);  // periodic true-residual refresh
    } else {
      r -= step * w;
    }
    const Scalar rho_new = r.squaredNorm();
    if (std::sqrt(rho_new) <= tol_abs) return k + 1;
    p = r + (rho_new / rho) * p;
    rho = rho_new;
  }
  return k;
}

}  // namespace detail

/// Solves (A^T A + alpha I) x = A^T y_delta for every shift alpha from a
/// single Krylov space built on A^T A, using scalar recurrences per shift.
/// Shifts whose recurrence breaks down or fails verification are re-solved by
/// plain per-shift CG; shifts still unconverged after maxit are flagged.
template <class Scalar>
std::vector<TikhonovPoint<Scalar>> tikhonov_cg_shifted(const Problem<Scalar>& p,
                                                       const std::vector<Scalar>& shifts,
                                                       const CgOptions& opts = {}) {
  if (!(opts.tol > 0)) throw std::invalid_argument("tikhonov_cg_shifted: tol must be positive");
  for (const Scalar a : shifts)
    if (!(a > 0)) throw std::invalid_argument("tikhonov_cg_shifted: shifts must be positive");

  const std::size_t ns = shifts.size();
  const Index n = p.op.cols();
  const VectorX<Scalar> b = p.op.apply_adjoint(p.y_noisy);
  const Scalar bnorm = b.norm();

  std::vector<VectorX<Scalar>> xs(ns, VectorX<Scalar>::Zero(n));
  std::vector<int> iters(ns, 0);
  std::vector<bool> done(ns, false);

  if (bnorm > 0) {
    std::vector<VectorX<Scalar>> ps(ns, b);
    std::vector<Scalar> zeta_k(ns, Scalar(1)), zeta_km1(ns, Scalar(1));

    VectorX<Scalar> r = b, pvec = b;
    Scalar rho = b.squaredNorm();
    Scalar step_km1 = 1, ortho_km1 = 0;
    std::size_t active = ns;
    Scalar rho_best = rho;
    int k_best = 0;

    for (int k = 0; k < opts.maxit && active > 0; ++k) {
      const VectorX<Scalar> w = p.op.apply_adjoint(p.op.apply(pvec));
      const Scalar pw = pvec.dot(w);
      if (!(pw > 0) || !std::isfinite(pw)) break;  // seed breakdown
      const Scalar step = rho / pw;
      const VectorX<Scalar> rnew = r - step * w;
      const Scalar rho_new = rnew.squaredNorm();
      const Scalar ortho = rho_new / rho;
      const Scalar rnorm_new = std::sqrt(rho_new);

      bool bad = false;
      for (std::size_t j = 0; j < ns; ++j) {
        if (done[j]) continue;
        const Scalar denom =
            step * ortho_km1 * (zeta_km1[j] - zeta_k[j]) + zeta_km1[j] * step_km1 * (Scalar(1) + shifts[j] * step);
        const Scalar zeta_next = zeta_k[j] * zeta_km1[j] * step_km1 / denom;
        if (!std::isfinite(zeta_next)) { bad = true; break; }
        const Scalar ratio = zeta_next / zeta_k[j];
        xs[j] += (step * ratio) * ps[j];
        ps[j] = zeta_next * rnew + (ortho * ratio * ratio) * ps[j];
        zeta_km1[j] = zeta_k[j];
        zeta_k[j] = zeta_next;
        iters[j] = k + 1;
        if (std::abs(zeta_next) * rnorm_new <= Scalar(opts.tol) * bnorm) {
          done[j] = true;
          --active;
        }
      }
      if (bad) break;

      r = rnew;
      pvec = rnew + ortho * pvec;
      rho = rho_new;
      step_km1 = step;
      ortho_km1 = ortho;
      if (rho < rho_best * Scalar(0.999)) { rho_best = rho; k_best = k; }
      if (k - k_best > 100) break;  // seed stagnated; remaining shifts go to fallback
      if (rho == 0) break;
    }

    // Verify against recomputed residuals; re-solve what the recurrence missed.
    for (std::size_t j = 0; j < ns; ++j) {
      const Scalar tol_abs = Scalar(opts.tol) * bnorm;
      auto true_res = [&](const VectorX<Scalar>& x) {
        return (b - p.op.apply_adjoint(p.op.apply(x)) - shifts[j] * x).norm();
      };
      if (!xs[j].allFinite()) xs[j].setZero();
      if (true_res(xs[j]) > tol_abs) {
        iters[j] += detail::cg_single_shift(p.op, b, shifts[j], xs[j], tol_abs, opts.maxit);
        done[j] = true_res(xs[j]) <= tol_abs;
      } else {
        done[j] = true;
      }
    }
  } else {
    done.assign(ns, true);  // b = 0: the minimizer is x = 0 for every shift
  }

  const Scalar floor2 = Scalar(p.meta.delta_meas) * Scalar(p.meta.delta_meas);
  std::vector<TikhonovPoint<Scalar>> out(ns);
  for (std::size_t j = 0; j < ns; ++j) {
    out[j].alpha = shifts[j];
    out[j].x = xs[j];
    out[j].residual_norm = std::sqrt((p.op.apply(xs[j]) - p.y_noisy).squaredNorm() + floor2);
    out[j].solution_norm = xs[j].norm();
    out[j].gradient_norm = shifts[j] * out[j].solution_norm;
    out[j].converged = done[j];
    out[j].iterations = iters[j];
  }
  return out;
}

template <class Scalar>
std::vector<TikhonovPoint<Scalar>> tikhonov_cg_shifted(const Problem<Scalar>& p, const AlphaGrid& grid,
                                                       const CgOptions& opts = {}) {
  const auto av = grid.values();
  std::vector<Scalar> shifts(av.begin(), av.end());
  return tikhonov_cg_shifted(p, shifts, opts);
}

/// One Tikhonov solve at a single alpha, dispatched by operator kind.
template <class Scalar>
TikhonovPoint<Scalar> tikhonov_solve(const Problem<Scalar>& p, Scalar alpha, const CgOptions& opts = {}) {
  if (p.op.is_diagonal()) return tikhonov_spectral(p, alpha);
  return tikhonov_cg_shifted(p, std::vector<Scalar>{alpha}, opts).front();
}

/// Solves the whole grid, spectral or shifted-CG path by operator kind.
template <class Scalar>
Sweep<Scalar> sweep(const Problem<Scalar>& p, const AlphaGrid& grid, const CgOptions& opts = {}) {
  grid.validate();
  Sweep<Scalar> s;
  s.grid = grid;
  s.meta = p.meta;
  s.data_norm = p.data_norm();
  if (p.op.is_diagonal()) {
    const auto alphas = grid.values();
    s.points.reserve(alphas.size());
    for (const double a : alphas) s.points.push_back(tikhonov_spectral(p, static_cast<Scalar>(a)));
  } else {
    s.points = tikhonov_cg_shifted(p, grid, opts);
  }
  return s;
}

}  // namespace rescurve
