#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rescurve/solver.hpp"
#include "rescurve/types.hpp"

namespace rescurve {

/// Residuals on the alpha grid together with the log-log slope
/// dr_i = (log r_i - log r_{i-1}) / (log alpha_i - log alpha_{i-1}).
/// dr[0] is NaN (no left neighbour).
template <class Scalar>
struct ResidualCurve {
  std::vector<Scalar> alpha;  // decreasing
  std::vector<Scalar> r;
  std::vector<Scalar> dr;
  int dropped_points{0};  // points excluded because r was zero (log undefined)
};

template <class Scalar>
ResidualCurve<Scalar> residual_curve(const Sweep<Scalar>& s) {
  if (s.points.size() < 3) throw std::invalid_argument("residual_curve: need at least 3 sweep points");

  ResidualCurve<Scalar> c;
  for (const auto& pt : s.points) {
    if (pt.residual_norm > 0) {
      c.alpha.push_back(pt.alpha);
      c.r.push_back(pt.residual_norm);
    } else {
      ++c.dropped_points;
    }
  }
  if (c.alpha.size() < 3) throw std::invalid_argument("residual_curve: too few points with positive residual");

  c.dr.assign(c.alpha.size(), std::numeric_limits<Scalar>::quiet_NaN());
  for (std::size_t i = 1; i < c.alpha.size(); ++i) {
    c.dr[i] = (std::log(c.r[i]) - std::log(c.r[i - 1])) / (std::log(c.alpha[i]) - std::log(c.alpha[i - 1]));
  }
  return c;
}

struct IndexRange {
  Index begin{0};
  Index end{0};
  bool empty() const { return end <= begin; }
  Index size() const { return empty() ? 0 : end - begin; }
};

/// Stages ordered by decreasing alpha: burn_in, approximation, plateau, floor.
/// Any range may be empty.
struct StageSegmentation {
  IndexRange burn_in;
  IndexRange approximation;
  IndexRange plateau;
  IndexRange floor;
};

struct SegmentationConfig {
  double flat_tol{0.05};        // |dr| bound for burn-in and plateau
  double stability_band{0.03};  // admissible dr spread around the window median
  Index plateau_min_len{5};
  double floor_slope{0.9};       // dr level marking the discrete descent
  double burn_in_level{0.9};     // r >= level * ||y_delta|| marks burn-in
  double stagnation_ratio{1.1};  // r within this factor of its minimum counts as stagnant
  double floor_drop_ratio{0.8};  // stagnation floor requires r_min below this share of the plateau level
};

namespace detail {

template <class Scalar>
Scalar sorted_median(const std::vector<Scalar>& sorted) {
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / Scalar(2);
}

// Contiguous runs in [lo, hi) whose dr values all lie within +-band of the
// run's own median, with the median inside (0.4, 1.0). `longest` prefers the
// earliest longest run; `deepest` prefers, among runs of at least min_len
// points, the one reaching furthest toward small alpha.
struct StableRuns {
  IndexRange longest;
  IndexRange deepest;
};

template <class Scalar>
StableRuns find_stable_runs(const std::vector<Scalar>& dr, Index lo, Index hi, double band,
                            Index min_len) {
  StableRuns out{{lo, lo}, {lo, lo}};
  for (Index i = lo; i < hi; ++i) {
    std::vector<Scalar> window;
    IndexRange run{i, i};
    for (Index j = i; j < hi; ++j) {
      const Scalar v = dr[static_cast<std::size_t>(j)];
      if (!std::isfinite(v)) break;
      window.insert(std::upper_bound(window.begin(), window.end(), v), v);
      const Scalar med = sorted_median(window);
      if (window.back() - med > Scalar(band) || med - window.front() > Scalar(band)) break;
      if (med > Scalar(0.4) && med < Scalar(1.0)) run = {i, j + 1};
    }
    if (run.size() > out.longest.size()) out.longest = run;
    if (run.size() >= min_len &&
        (run.end > out.deepest.end || (run.end == out.deepest.end && run.size() > out.deepest.size())))
      out.deepest = run;
  }
  return out;
}

}  // namespace detail

template <class Scalar>
StageSegmentation segment_stages(const ResidualCurve<Scalar>& c, Scalar ynorm,
                                 const SegmentationConfig& cfg = {}) {
  const Index n = static_cast<Index>(c.alpha.size());
  StageSegmentation seg;

  // burn-in: maximal prefix still at the data norm with a flat slope
  Index b = 0;
  while (b < n) {
    const Scalar slope = c.dr[static_cast<std::size_t>(std::max<Index>(b, 1))];
    if (c.r[static_cast<std::size_t>(b)] >= Scalar(cfg.burn_in_level) * ynorm &&
        std::abs(slope) <= Scalar(cfg.flat_tol))
      ++b;
    else
      break;
  }
  seg.burn_in = {0, b};

  // discrete descent floor: maximal suffix with dr >= floor_slope
  Index f = n;
  while (f > std::max<Index>(b, 1) && c.dr[static_cast<std::size_t>(f - 1)] >= Scalar(cfg.floor_slope)) --f;
  seg.floor = {f, n};
  if (seg.floor.empty()) seg.floor = {n, n};

  seg.approximation =
      detail::find_stable_runs(c.dr, std::max<Index>(b, 1), seg.floor.begin, cfg.stability_band, 2).longest;

  // plateau: first flat run of sufficient length after the approximation phase
  const Index pstart = seg.approximation.empty() ? std::max<Index>(b, 1) : seg.approximation.end;
  seg.plateau = {pstart, pstart};
  for (Index i = pstart; i < seg.floor.begin; ++i) {
    Index j = i;
    while (j < seg.floor.begin && std::abs(c.dr[static_cast<std::size_t>(j)]) <= Scalar(cfg.flat_tol)) ++j;
    if (j - i >= cfg.plateau_min_len) {
      seg.plateau = {i, j};
      break;
    }
    if (j > i) i = j;
  }

  // stagnation floor (modelling error): the residual settles visibly below
  // the plateau level and stops moving
  if (seg.floor.empty() && !seg.plateau.empty() && seg.plateau.end < n) {
    Scalar rmin = c.r[static_cast<std::size_t>(seg.plateau.end)];
    for (Index i = seg.plateau.end; i < n; ++i) rmin = std::min(rmin, c.r[static_cast<std::size_t>(i)]);
    std::vector<Scalar> plateau_r(c.r.begin() + seg.plateau.begin, c.r.begin() + seg.plateau.end);
    std::sort(plateau_r.begin(), plateau_r.end());
    const Scalar plateau_level = detail::sorted_median(plateau_r);
    if (rmin <= Scalar(cfg.floor_drop_ratio) * plateau_level) {
      Index t = n;
      while (t > seg.plateau.end && c.r[static_cast<std::size_t>(t - 1)] <= Scalar(cfg.stagnation_ratio) * rmin &&
             std::abs(c.dr[static_cast<std::size_t>(t - 1)]) <= Scalar(cfg.flat_tol))
        --t;
      if (t < n) seg.floor = {t, n};
    }
  }

  return seg;
}

enum class SmoothnessClass { holder, high_smoothness, low_smoothness, noise_dominated, no_source_condition };

inline const char* to_string(SmoothnessClass c) {
  switch (c) {
    case SmoothnessClass::holder: return "holder";
    case SmoothnessClass::high_smoothness: return "high_smoothness";
    case SmoothnessClass::low_smoothness: return "low_smoothness";
    case SmoothnessClass::noise_dominated: return "noise_dominated";
    case SmoothnessClass::no_source_condition: return "no_source_condition";
  }
  return "unknown";
}

struct SmoothnessEstimate {
  double kappa{std::numeric_limits<double>::quiet_NaN()};        // fitted log-log slope
  double mu{std::numeric_limits<double>::quiet_NaN()};           // kappa - 1/2
  double fit_quality{0};                                         // R^2 of the linear fit
  double curvature{std::numeric_limits<double>::quiet_NaN()};    // quadratic log10-log10 coefficient
  SmoothnessClass classification{SmoothnessClass::noise_dominated};
  IndexRange window;
  bool used_fallback_window{false};
  bool noise_corrected{false};  // fit ran on sqrt(r^2 - delta_hat^2)
};

struct SmoothnessConfig {
  Index min_window{8};
  double r2_threshold{0.995};
  double curvature_threshold{0.008};
  double boundary_low{0.02};    // mu below this: slower than detectable power decay
  double boundary_high{0.48};   // mu above this: residual slope saturates
  double stability_band{0.03};  // slope spread for the corrected-fit window
  int oscillation_sign_changes{4};
  double oscillation_peak_ratio{3.0};
  double fallback_descent_tol{0.1};  // dr above this counts as descent for the fallback window
  double floor_headroom{0.05};       // corrected fit keeps points with r >= (1+headroom) * delta_hat
  Index fit_window_len{12};          // corrected fit uses at most this many of the deepest points
};

namespace detail {

struct PolyFit {
  double slope{0};
  double quad{0};  // leading coefficient of the quadratic fit
  double r2{0};
  std::vector<double> residuals;  // linear-fit residuals
};

// Least-squares line and parabola through (x, y), x centered for conditioning.
inline PolyFit fit_line_and_quad(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < n; ++i) { xm += x[i]; ym += y[i]; }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);

  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xm, dy = y[i] - ym;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  PolyFit out;
  out.slope = sxy / sxx;

  out.residuals.resize(n);
  double ssres = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.residuals[i] = y[i] - (ym + out.slope * (x[i] - xm));
    ssres += out.residuals[i] * out.residuals[i];
  }
  out.r2 = syy > 0 ? 1.0 - ssres / syy : 1.0;

  // quadratic fit a dx^2 + b dx + c via centered normal equations; the
  // leading coefficient is shift-invariant
  double s3 = 0, s4 = 0, sx2y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xm, dy = y[i] - ym;
    s3 += dx * dx * dx;
    s4 += dx * dx * dx * dx;
    sx2y += dx * dx * dy;
  }
  const double nn = static_cast<double>(n);
  const double a11 = s4 - sxx * sxx / nn;
  const double det = a11 * sxx - s3 * s3;
  out.quad = det != 0 ? (sx2y * sxx - s3 * sxy) / det : 0.0;
  return out;
}

inline int sign_changes(const std::vector<double>& e) {
  int changes = 0;
  double prev = 0;
  for (const double v : e) {
    if (v == 0) continue;
    if (prev != 0 && ((v > 0) != (prev > 0))) ++changes;
    prev = v;
  }
  return changes;
}

inline bool oscillation_detected(const std::vector<double>& e, const SmoothnessConfig& cfg) {
  double ms = 0, peak = 0;
  for (const double v : e) {
    ms += v * v;
    peak = std::max(peak, std::abs(v));
  }
  const double rms = std::sqrt(ms / static_cast<double>(e.size()));
  return sign_changes(e) >= cfg.oscillation_sign_changes && peak >= cfg.oscillation_peak_ratio * rms;
}

}  // namespace detail

namespace detail {

inline SmoothnessClass classify_fit(const PolyFit& fit, bool oscillating, const SmoothnessConfig& cfg) {
  if (fit.quad < -cfg.curvature_threshold) return SmoothnessClass::high_smoothness;
  if (fit.quad > cfg.curvature_threshold) return SmoothnessClass::low_smoothness;
  if (fit.r2 < cfg.r2_threshold)
    return oscillating ? SmoothnessClass::no_source_condition : SmoothnessClass::noise_dominated;
  const double mu = fit.slope - 0.5;
  if (mu >= cfg.boundary_high) return SmoothnessClass::high_smoothness;
  if (mu <= cfg.boundary_low) return SmoothnessClass::low_smoothness;
  return SmoothnessClass::holder;
}

inline PolyFit fit_window(const std::vector<double>& la, const std::vector<double>& lr,
                          IndexRange window) {
  std::vector<double> x(la.begin() + window.begin, la.begin() + window.end);
  std::vector<double> y(lr.begin() + window.begin, lr.begin() + window.end);
  return fit_line_and_quad(x, y);
}

}  // namespace detail

/// Fits log10 r = c + kappa log10 alpha (+ quadratic term) over the
/// approximation window and classifies the smoothness regime.
///
/// When a noise floor is known (the saddle estimate), the fit runs on the
/// corrected residuals sqrt(r^2 - delta_hat^2), which removes the downward
/// bend the noise imposes just above the plateau; the window is then the
/// deepest slope-stable run, and a verdict of strong curvature is re-checked
/// on the deeper half of the window so a burn-in bend is not mistaken for
/// genuine non-power behaviour.
///
/// Without a usable stable window the routine falls back to the descent span
/// between burn-in and plateau/floor, which can only report
/// no_source_condition or noise_dominated.
template <class Scalar>
SmoothnessEstimate estimate_smoothness(const ResidualCurve<Scalar>& c, const StageSegmentation& seg,
                                       const SmoothnessConfig& cfg = {},
                                       double noise_floor = std::numeric_limits<double>::quiet_NaN()) {
  const Index n = static_cast<Index>(c.alpha.size());
  SmoothnessEstimate est;

  if (std::isfinite(noise_floor) && noise_floor > 0) {
    const double keep_above = (1.0 + cfg.floor_headroom) * noise_floor;
    std::vector<double> la, lr;
    std::vector<double> dra;
    const Index prefix_end_limit = seg.floor.empty() ? n : seg.floor.begin;
    for (Index i = 0; i < prefix_end_limit; ++i) {
      const double r = static_cast<double>(c.r[static_cast<std::size_t>(i)]);
      if (!(r >= keep_above)) break;
      la.push_back(std::log10(static_cast<double>(c.alpha[static_cast<std::size_t>(i)])));
      lr.push_back(0.5 * std::log10(r * r - noise_floor * noise_floor));
      dra.push_back(la.size() > 1
                        ? (lr[lr.size() - 1] - lr[lr.size() - 2]) / (la[la.size() - 1] - la[la.size() - 2])
                        : std::numeric_limits<double>::quiet_NaN());
    }
    const Index m = static_cast<Index>(la.size());
    const Index lo = std::max<Index>(seg.burn_in.end, 1);
    if (m > lo) {
      const auto runs = detail::find_stable_runs(dra, lo, m, cfg.stability_band, cfg.min_window);
      IndexRange window = runs.deepest;
      // the last corrected point sits closest to the floor and carries the
      // largest correction error; drop it when the run touches the cutoff
      if (window.end == m && window.size() > cfg.min_window) --window.end;
      if (window.size() >= cfg.min_window) {
        // trim to the deepest points: least knee and least noise contamination
        if (window.size() > cfg.fit_window_len) window.begin = window.end - cfg.fit_window_len;
        const auto fit = detail::fit_window(la, lr, window);
        est.kappa = fit.slope;
        est.mu = fit.slope - 0.5;
        est.fit_quality = fit.r2;
        est.curvature = fit.quad;
        est.window = window;
        est.noise_corrected = true;
        est.classification = detail::classify_fit(fit, detail::oscillation_detected(fit.residuals, cfg), cfg);
        return est;
      }
    }
  }

  est.window = seg.approximation;
  if (est.window.size() < cfg.min_window) {
    // descent span between burn-in and plateau/floor
    Index hi = n;
    if (!seg.plateau.empty()) hi = seg.plateau.begin;
    if (!seg.floor.empty()) hi = std::min(hi, seg.floor.begin);
    Index lo = std::max<Index>(seg.burn_in.end, 1);
    while (lo < hi && !(c.dr[static_cast<std::size_t>(lo)] > Scalar(cfg.fallback_descent_tol))) ++lo;
    Index last = hi;
    while (last > lo && !(c.dr[static_cast<std::size_t>(last - 1)] > Scalar(cfg.fallback_descent_tol))) --last;
    est.window = {lo, last};
    est.used_fallback_window = true;
    if (est.window.size() < cfg.min_window) {
      est.classification = SmoothnessClass::noise_dominated;
      est.window = {lo, lo};
      return est;
    }
  }

  std::vector<double> lx, ly;
  lx.reserve(static_cast<std::size_t>(est.window.size()));
  for (Index i = est.window.begin; i < est.window.end; ++i) {
    lx.push_back(std::log10(static_cast<double>(c.alpha[static_cast<std::size_t>(i)])));
    ly.push_back(std::log10(static_cast<double>(c.r[static_cast<std::size_t>(i)])));
  }
  const auto fit = detail::fit_line_and_quad(lx, ly);
  est.kappa = fit.slope;
  est.mu = fit.slope - 0.5;
  est.fit_quality = fit.r2;
  est.curvature = fit.quad;
  const bool oscillating = detail::oscillation_detected(fit.residuals, cfg);

  if (est.used_fallback_window) {
    est.classification = (fit.r2 < cfg.r2_threshold && oscillating) ? SmoothnessClass::no_source_condition
                                                                    : SmoothnessClass::noise_dominated;
    return est;
  }
  est.classification = detail::classify_fit(fit, oscillating, cfg);
  return est;
}

struct NoiseEstimate {
  bool found{false};
  double alpha_star{std::numeric_limits<double>::quiet_NaN()};
  double delta_hat{std::numeric_limits<double>::quiet_NaN()};
  std::string reason;
};

/// Saddle-point noise estimate: alpha_star = argmin dr after the
/// approximation phase and before the floor, delta_hat = r(alpha_star).
/// The minimum must be flat (dr <= saddle_tol) to count as a plateau.
template <class Scalar>
NoiseEstimate estimate_noise(const ResidualCurve<Scalar>& c, const StageSegmentation& seg,
                             double saddle_tol = 0.1) {
  const Index n = static_cast<Index>(c.alpha.size());
  const Index lo = seg.approximation.empty() ? std::max<Index>(seg.burn_in.end, 1) : seg.approximation.end;
  const Index hi = seg.floor.empty() ? n : seg.floor.begin;

  NoiseEstimate out;
  if (lo >= hi) {
    out.reason = "no plateau detected";
    return out;
  }
  Index best = lo;
  for (Index i = lo; i < hi; ++i) {
    if (c.dr[static_cast<std::size_t>(i)] <= c.dr[static_cast<std::size_t>(best)]) best = i;  // ties: smaller alpha
  }
  if (!(c.dr[static_cast<std::size_t>(best)] <= Scalar(saddle_tol))) {
    out.reason = "no plateau detected";
    return out;
  }
  out.found = true;
  out.alpha_star = static_cast<double>(c.alpha[static_cast<std::size_t>(best)]);
  out.delta_hat = static_cast<double>(c.r[static_cast<std::size_t>(best)]);
  return out;
}

struct AnalysisConfig {
  SegmentationConfig segmentation;
  SmoothnessConfig smoothness;
  double saddle_tol{0.1};
};

template <class Scalar>
struct CurveAnalysis {
  ResidualCurve<Scalar> curve;
  StageSegmentation segmentation;
  NoiseEstimate noise;
  SmoothnessEstimate smoothness;
};

/// Full pipeline on one sweep: stage segmentation, saddle noise estimate,
/// then the smoothness fit (noise-corrected when a plateau was found).
template <class Scalar>
CurveAnalysis<Scalar> analyze_curve(const Sweep<Scalar>& s, const AnalysisConfig& cfg = {}) {
  CurveAnalysis<Scalar> out{residual_curve(s), {}, {}, {}};
  out.segmentation = segment_stages(out.curve, s.data_norm, cfg.segmentation);
  out.noise = estimate_noise(out.curve, out.segmentation, cfg.saddle_tol);
  out.smoothness =
      estimate_smoothness(out.curve, out.segmentation, cfg.smoothness,
                          out.noise.found ? out.noise.delta_hat : std::numeric_limits<double>::quiet_NaN());
  return out;
}

}  // namespace rescurve
