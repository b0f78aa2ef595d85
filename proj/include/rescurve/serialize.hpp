#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rescurve/param_choice.hpp"
#include "rescurve/problems.hpp"
#include "rescurve/residual_curve.hpp"

namespace rescurve {

using json = nlohmann::json;

namespace detail {

template <class T>
json opt_json(const std::optional<T>& v) {
  if (v) return *v;
  return nullptr;
}

inline std::vector<double> to_std(const VectorX<double>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline VectorX<double> from_std(const std::vector<double>& v) {
  VectorX<double> out(static_cast<Index>(v.size()));
  for (Index i = 0; i < out.size(); ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace detail

inline json meta_to_json(const ProblemMeta& m) {
  return json{{"kind", m.kind},
              {"eta", detail::opt_json(m.eta)},
              {"beta", detail::opt_json(m.beta)},
              {"kappa", detail::opt_json(m.kappa)},
              {"mu_star", detail::opt_json(m.mu_star)},
              {"n", m.n},
              {"seed", detail::opt_json(m.seed)},
              {"noise_relative", detail::opt_json(m.noise_relative)},
              {"off_range_fraction", m.off_range_fraction},
              {"delta_meas", m.delta_meas}};
}

inline ProblemMeta meta_from_json(const json& j) {
  ProblemMeta m;
  m.kind = j.value("kind", std::string("custom"));
  auto get_opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  m.eta = get_opt("eta");
  m.beta = get_opt("beta");
  m.kappa = get_opt("kappa");
  m.mu_star = get_opt("mu_star");
  m.n = j.value("n", Index(0));
  if (j.contains("seed") && !j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
  m.noise_relative = get_opt("noise_relative");
  m.off_range_fraction = j.value("off_range_fraction", 0.0);
  m.delta_meas = j.value("delta_meas", 0.0);
  return m;
}

/// Serializes a diagonal-operator problem. Dense (external) problems are
/// built from .mtx / .csv files and are not stored in this format.
inline json problem_to_json(const Problem<double>& p) {
  if (!p.op.is_diagonal())
    throw std::invalid_argument("problem_to_json: only diagonal problems serialize to JSON");
  json j;
  j["sigma"] = detail::to_std(p.op.diagonal().singular_values());
  j["x_true"] = p.x_true ? json(detail::to_std(*p.x_true)) : json(nullptr);
  j["y_exact"] = p.y_exact ? json(detail::to_std(*p.y_exact)) : json(nullptr);
  j["y_noisy"] = detail::to_std(p.y_noisy);
  j["delta_true"] = detail::opt_json(p.delta_true);
  j["meta"] = meta_to_json(p.meta);
  return j;
}

inline Problem<double> problem_from_json(const json& j) {
  const auto sigma = detail::from_std(j.at("sigma").get<std::vector<double>>());
  Problem<double> p{Operator<double>(DiagonalOperator<double>(sigma)),
                    std::nullopt,
                    std::nullopt,
                    detail::from_std(j.at("y_noisy").get<std::vector<double>>()),
                    std::nullopt,
                    {}};
  if (j.contains("x_true") && !j.at("x_true").is_null())
    p.x_true = detail::from_std(j.at("x_true").get<std::vector<double>>());
  if (j.contains("y_exact") && !j.at("y_exact").is_null())
    p.y_exact = detail::from_std(j.at("y_exact").get<std::vector<double>>());
  if (j.contains("delta_true") && !j.at("delta_true").is_null())
    p.delta_true = j.at("delta_true").get<double>();
  if (j.contains("meta")) p.meta = meta_from_json(j.at("meta"));
  validate_problem(p);
  return p;
}

inline void save_problem(const std::string& path, const Problem<double>& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_problem: cannot open " + path);
  out << problem_to_json(p).dump(2) << '\n';
}

inline Problem<double> load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_problem: cannot open " + path);
  json j;
  in >> j;
  return problem_from_json(j);
}

inline json smoothness_to_json(const SmoothnessEstimate& e) {
  return json{{"kappa", e.kappa},
              {"mu", e.mu},
              {"fit_quality", e.fit_quality},
              {"curvature", e.curvature},
              {"classification", to_string(e.classification)}};
}

inline json noise_to_json(const NoiseEstimate& e) {
  if (!e.found) return json{{"alpha_star", nullptr}, {"delta_hat", nullptr}, {"reason", e.reason}};
  return json{{"alpha_star", e.alpha_star}, {"delta_hat", e.delta_hat}};
}

inline json range_to_json(const IndexRange& r) {
  if (r.empty()) return nullptr;
  return json::array({r.begin, r.end});
}

inline json segmentation_to_json(const StageSegmentation& s) {
  return json{{"burn_in", range_to_json(s.burn_in)},
              {"approximation", range_to_json(s.approximation)},
              {"plateau", range_to_json(s.plateau)},
              {"floor", range_to_json(s.floor)}};
}

inline json choice_to_json(const ChoiceResult& r) {
  json j{{"rule", to_string(r.rule)}, {"label", r.label}, {"ok", r.ok}};
  if (!r.ok) {
    j["message"] = r.message;
    return j;
  }
  j["alpha"] = r.alpha;
  j["err_ratio"] = detail::opt_json(r.error_ratio);
  j["res_ratio"] = detail::opt_json(r.residual_ratio);
  json diag;
  if (r.tau) diag["tau"] = *r.tau;
  if (r.rho) diag["rho"] = *r.rho;
  if (r.corner_curvature) diag["corner_curvature"] = *r.corner_curvature;
  if (!diag.empty()) j["diagnostics"] = diag;
  return j;
}

}  // namespace rescurve
