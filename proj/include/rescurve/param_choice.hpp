#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rescurve/residual_curve.hpp"
#include "rescurve/solver.hpp"
#include "rescurve/types.hpp"

namespace rescurve {

enum class ChoiceRule { apriori, dp, heuristic_dp, lcurve, rdm, oracle };

inline const char* to_string(ChoiceRule r) {
  switch (r) {
    case ChoiceRule::apriori: return "apriori";
    case ChoiceRule::dp: return "dp";
    case ChoiceRule::heuristic_dp: return "heuristic_dp";
    case ChoiceRule::lcurve: return "lcurve";
    case ChoiceRule::rdm: return "rdm";
    case ChoiceRule::oracle: return "oracle";
  }
  return "unknown";
}

struct ChoiceResult {
  ChoiceRule rule{ChoiceRule::oracle};
  std::string label;
  bool ok{false};
  std::string message;
  double alpha{std::numeric_limits<double>::quiet_NaN()};
  std::optional<double> error_ratio;     // ||x_a - x'|| / ||x_opt - x'||
  std::optional<double> residual_ratio;  // r(a) / r(a_opt)
  // rule-specific diagnostics
  std::optional<double> tau;
  std::optional<double> rho;
  std::optional<double> corner_curvature;
};

/// A-priori rule alpha = (delta / rho)^(2 / (2 mu + 1)).
inline double choose_apriori(double delta, double mu, double rho) {
  if (!(delta > 0)) throw std::invalid_argument("choose_apriori: delta must be positive");
  if (!(mu > 0 && mu <= 1)) throw std::invalid_argument("choose_apriori: mu must lie in (0, 1]");
  if (!(rho > 0)) throw std::invalid_argument("choose_apriori: rho must be positive");
  return std::pow(delta / rho, 2.0 / (2.0 * mu + 1.0));
}

/// rho = ||w|| for the source representation w_i = sigma_i^{-2 mu} x_i,
/// truncated once the accumulation stops changing by 1e-14 relative.
template <class Scalar>
double source_norm_rho(const Problem<Scalar>& p, double mu) {
  if (!p.op.is_diagonal()) throw std::invalid_argument("source_norm_rho: requires a diagonal operator");
  if (!p.x_true) throw std::invalid_argument("source_norm_rho: ground truth missing");
  const VectorX<Scalar>& sigma = p.op.diagonal().singular_values();
  const VectorX<Scalar>& x = *p.x_true;
  double acc = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    const double term = std::pow(static_cast<double>(sigma[i]), -4.0 * mu) *
                        static_cast<double>(x[i]) * static_cast<double>(x[i]);
    if (acc > 0 && term < 1e-14 * acc) break;
    acc += term;
  }
  return std::sqrt(acc);
}

/// Largest grid alpha with r(alpha) <= tau * delta.
template <class Scalar>
double choose_discrepancy(const Sweep<Scalar>& s, double delta, double tau) {
  if (!(tau > 1)) throw std::invalid_argument("choose_discrepancy: tau must exceed 1");
  if (!(delta > 0)) throw std::invalid_argument("choose_discrepancy: delta must be positive");
  for (const auto& pt : s.points) {
    if (static_cast<double>(pt.residual_norm) <= tau * delta) return static_cast<double>(pt.alpha);
  }
  throw std::runtime_error("choose_discrepancy: no grid point reaches tau * delta");
}

/// Same rule refined by bisection (in log alpha) between the bracketing grid
/// points; r is continuous and monotone so the crossing is unique.
template <class Scalar>
double choose_discrepancy(const Problem<Scalar>& p, const Sweep<Scalar>& s, double delta, double tau,
                          int bisection_steps = 30, const CgOptions& opts = {}) {
  if (!(tau > 1)) throw std::invalid_argument("choose_discrepancy: tau must exceed 1");
  if (!(delta > 0)) throw std::invalid_argument("choose_discrepancy: delta must be positive");
  const double level = tau * delta;
  std::size_t idx = s.points.size();
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    if (static_cast<double>(s.points[i].residual_norm) <= level) { idx = i; break; }
  }
  if (idx == s.points.size()) throw std::runtime_error("choose_discrepancy: no grid point reaches tau * delta");
  if (idx == 0) return static_cast<double>(s.points[0].alpha);

  double lo = static_cast<double>(s.points[idx].alpha);      // satisfies the bound
  double hi = static_cast<double>(s.points[idx - 1].alpha);  // violates it
  for (int k = 0; k < bisection_steps; ++k) {
    const double mid = std::sqrt(lo * hi);
    const double r = static_cast<double>(tikhonov_solve(p, static_cast<Scalar>(mid), opts).residual_norm);
    (r <= level ? lo : hi) = mid;
  }
  return lo;
}

/// Grid alpha minimizing r(alpha)^2 / alpha; ties toward larger alpha.
template <class Scalar>
double choose_heuristic_dp(const Sweep<Scalar>& s) {
  if (s.points.empty()) throw std::invalid_argument("choose_heuristic_dp: empty sweep");
  std::size_t best = 0;
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const double r = static_cast<double>(s.points[i].residual_norm);
    const double f = r * r / static_cast<double>(s.points[i].alpha);
    if (f < best_f) { best_f = f; best = i; }
  }
  return static_cast<double>(s.points[best].alpha);
}

struct CornerResult {
  bool found{false};
  double alpha{std::numeric_limits<double>::quiet_NaN()};
  double curvature{0};
};

/// L-curve corner: maximum discrete Menger curvature of the
/// (log10 r, log10 ||x||) polyline after a 3-point moving average.
template <class Scalar>
CornerResult choose_lcurve(const Sweep<Scalar>& s, double corner_min_curvature = 3.0) {
  if (s.points.size() < 5) throw std::invalid_argument("choose_lcurve: need at least 5 sweep points");

  std::vector<double> u, v, alpha;
  for (const auto& pt : s.points) {
    if (pt.residual_norm > 0 && pt.solution_norm > 0) {
      u.push_back(std::log10(static_cast<double>(pt.residual_norm)));
      v.push_back(std::log10(static_cast<double>(pt.solution_norm)));
      alpha.push_back(static_cast<double>(pt.alpha));
    }
  }
  CornerResult out;
  if (u.size() < 5) return out;

  const std::size_t n = u.size();
  std::vector<double> us(u), vs(v);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    us[i] = (u[i - 1] + u[i] + u[i + 1]) / 3.0;
    vs[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
  }

  std::size_t best = 0;
  double best_k = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ax = us[i - 1] - us[i], ay = vs[i - 1] - vs[i];
    const double bx = us[i + 1] - us[i], by = vs[i + 1] - vs[i];
    const double cx = us[i + 1] - us[i - 1], cy = vs[i + 1] - vs[i - 1];
    const double la = std::hypot(ax, ay), lb = std::hypot(bx, by), lc = std::hypot(cx, cy);
    if (la == 0 || lb == 0 || lc == 0) continue;
    const double area2 = std::abs(ax * by - ay * bx);
    const double k = 2.0 * area2 / (la * lb * lc);
    if (k > best_k) { best_k = k; best = i; }
  }
  out.curvature = best_k;
  if (best_k >= corner_min_curvature) {
    out.found = true;
    out.alpha = alpha[best];
  }
  return out;
}

/// Residual differential method: grid alpha minimizing the centered finite
/// difference of r with respect to alpha (not log-log); ties toward smaller alpha.
template <class Scalar>
double choose_rdm(const ResidualCurve<Scalar>& c) {
  if (c.alpha.size() < 3) throw std::invalid_argument("choose_rdm: need at least 3 points");
  std::size_t best = 1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < c.alpha.size(); ++i) {
    const double d = static_cast<double>(c.r[i + 1] - c.r[i - 1]) /
                     static_cast<double>(c.alpha[i + 1] - c.alpha[i - 1]);
    if (d <= best_d) { best_d = d; best = i; }
  }
  return static_cast<double>(c.alpha[best]);
}

/// Grid alpha minimizing the reconstruction error against the known solution.
template <class Scalar>
double choose_oracle(const Sweep<Scalar>& s, const VectorX<Scalar>& x_true) {
  if (s.points.empty()) throw std::invalid_argument("choose_oracle: empty sweep");
  std::size_t best = 0;
  double best_e = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    if (s.points[i].x.size() != x_true.size())
      throw std::invalid_argument("choose_oracle: sweep points carry no solutions");
    const double e = static_cast<double>((s.points[i].x - x_true).norm());
    if (e < best_e) { best_e = e; best = i; }
  }
  return static_cast<double>(s.points[best].alpha);
}

struct RuleSpec {
  ChoiceRule rule;
  double tau{1.01};  // dp only
};

inline std::vector<RuleSpec> default_rule_set() {
  return {{ChoiceRule::oracle}, {ChoiceRule::dp, 1.01}, {ChoiceRule::apriori},
          {ChoiceRule::dp, 1.1}, {ChoiceRule::heuristic_dp}, {ChoiceRule::rdm}};
}

/// Runs one sweep and evaluates every requested rule against the oracle-optimal
/// choice. Per-rule failures are recorded inline, never fatal.
template <class Scalar>
std::vector<ChoiceResult> compare_rules(const Problem<Scalar>& p, const AlphaGrid& grid,
                                        const std::vector<RuleSpec>& rules = default_rule_set(),
                                        const CgOptions& opts = {}) {
  const Sweep<Scalar> s = sweep(p, grid, opts);
  const ResidualCurve<Scalar> curve = residual_curve(s);

  std::optional<double> alpha_opt;
  double err_opt = 0, res_opt = 0;
  if (p.x_true) {
    alpha_opt = choose_oracle(s, *p.x_true);
    const auto pt = tikhonov_solve(p, static_cast<Scalar>(*alpha_opt), opts);
    err_opt = static_cast<double>((pt.x - *p.x_true).norm());
    res_opt = static_cast<double>(pt.residual_norm);
  }

  std::vector<ChoiceResult> out;
  out.reserve(rules.size());
  for (const auto& spec : rules) {
    ChoiceResult cr;
    cr.rule = spec.rule;
    cr.label = to_string(spec.rule);
    try {
      switch (spec.rule) {
        case ChoiceRule::oracle: {
          if (!p.x_true) throw std::invalid_argument("oracle: ground truth missing");
          cr.alpha = *alpha_opt;
          break;
        }
        case ChoiceRule::dp: {
          if (!p.delta_true || !(*p.delta_true > 0))
            throw std::invalid_argument("dp: positive noise level required");
          cr.tau = spec.tau;
          cr.label = "dp(tau=" + std::to_string(spec.tau).substr(0, 4) + ")";
          cr.alpha = choose_discrepancy(p, s, static_cast<double>(*p.delta_true), spec.tau, 30, opts);
          break;
        }
        case ChoiceRule::apriori: {
          if (!p.delta_true || !(*p.delta_true > 0))
            throw std::invalid_argument("apriori: positive noise level required");
          if (!p.meta.mu_star) throw std::invalid_argument("apriori: smoothness unknown");
          const double rho = source_norm_rho(p, *p.meta.mu_star);
          cr.rho = rho;
          cr.alpha = choose_apriori(static_cast<double>(*p.delta_true), *p.meta.mu_star, rho);
          break;
        }
        case ChoiceRule::heuristic_dp:
          cr.alpha = choose_heuristic_dp(s);
          break;
        case ChoiceRule::lcurve: {
          const auto corner = choose_lcurve(s);
          cr.corner_curvature = corner.curvature;
          if (!corner.found) throw std::runtime_error("lcurve: no corner");
          cr.alpha = corner.alpha;
          break;
        }
        case ChoiceRule::rdm:
          cr.alpha = choose_rdm(curve);
          break;
      }
      cr.ok = true;
      if (p.x_true && cr.alpha > 0) {
        const auto pt = tikhonov_solve(p, static_cast<Scalar>(cr.alpha), opts);
        if (err_opt > 0) cr.error_ratio = static_cast<double>((pt.x - *p.x_true).norm()) / err_opt;
        if (res_opt > 0) cr.residual_ratio = static_cast<double>(pt.residual_norm) / res_opt;
      }
    } catch (const std::exception& e) {
      cr.ok = false;
      cr.message = e.what();
    }
    out.push_back(std::move(cr));
  }
  return out;
}

}  // namespace rescurve
