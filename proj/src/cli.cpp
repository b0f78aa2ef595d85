#include "rescurve/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rescurve/diagnostics.hpp"
#include "rescurve/io.hpp"
#include "rescurve/param_choice.hpp"
#include "rescurve/problems.hpp"
#include "rescurve/residual_curve.hpp"
#include "rescurve/serialize.hpp"
#include "rescurve/solver.hpp"

namespace rescurve::cli {

namespace {

namespace fs = std::filesystem;

struct GridFlags {
  double alpha0 = 1.0;
  double ratio = std::pow(10.0, -0.1);
  int steps = 121;

  AlphaGrid grid() const { return {alpha0, ratio, steps}; }

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha0", alpha0, "Largest grid value");
    cmd->add_option("--ratio,--q", ratio, "Geometric grid ratio in (0,1)");
    cmd->add_option("--steps", steps, "Number of grid points");
  }
};

struct CgFlags {
  double tol = 1e-10;
  int maxit = 5000;

  CgOptions options() const { return {tol, maxit}; }

  void attach(CLI::App* cmd) {
    cmd->add_option("--tol", tol, "Relative normal-equation residual target");
    cmd->add_option("--maxit", maxit, "Iteration cap per shift");
  }
};

struct AnalysisFlags {
  SegmentationConfig seg;
  SmoothnessConfig smooth;
  double saddle_tol = 0.1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--flat-tol", seg.flat_tol, "Slope bound for burn-in/plateau flatness");
    cmd->add_option("--band", seg.stability_band, "Slope spread allowed in the approximation window");
    cmd->add_option("--plateau-min", seg.plateau_min_len, "Minimum plateau length in grid points");
    cmd->add_option("--min-window", smooth.min_window, "Minimum regression window length");
    cmd->add_option("--r2-threshold", smooth.r2_threshold, "Fit quality required for a verdict");
    cmd->add_option("--curvature-threshold", smooth.curvature_threshold,
                    "Log-log quadratic coefficient separating the smoothness classes");
    cmd->add_option("--saddle-tol", saddle_tol, "Largest slope accepted at the noise saddle");
  }
};

void attach_config(CLI::App* cmd) {
  // config tokens are injected ahead of explicit flags; the last value wins
  cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--config", "Flat key=value config file; explicit flags override file values");
}

// Expands `--config file` into the equivalent flags, keeping explicitly
// passed flags authoritative. The file is flat `key = value` text with '#'
// comments; one file can drive the whole pipeline, so keys the invoked
// subcommand does not know are skipped.
std::vector<std::string> expand_config_args(std::vector<std::string> args, const CLI::App& app) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty() || args.empty()) return args;

  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args.front());
  } catch (const CLI::Error&) {
    return args;  // let the regular parse report the unknown subcommand
  }

  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config file " + config_path);
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config file: expected key=value, got '" + line + "'");
    const std::string key = "--" + trim(line.substr(0, eq));
    if (sub->get_option_no_throw(key) == nullptr) continue;
    injected.push_back(key);
    injected.push_back(trim(line.substr(eq + 1)));
  }
  // place file values right after the subcommand so explicit flags come later
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string default_out_dir() {
  if (const char* env = std::getenv("RESCURVE_OUTDIR")) return env;
  return ".";
}

fs::path run_directory(const std::string& config_text) {
  std::ostringstream hex;
  hex << std::hex << fnv1a(config_text);
  fs::path dir = fs::path(default_out_dir()) / ("run-" + hex.str());
  fs::create_directories(dir);
  return dir;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << '\n';
}

int report_unconverged(const Sweep<double>& s) {
  int bad = 0;
  for (const auto& pt : s.points) {
    if (!pt.converged) {
      std::cerr << "warning: shift alpha=" << format_g17(pt.alpha) << " did not converge after "
                << pt.iterations << " iterations\n";
      ++bad;
    }
  }
  return bad;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string model = "holder";
  double eta = 2.0;
  double beta = 2.0;
  double kappa = 1.5;
  Index n = 4096;
  double noise = 0.0;
  double off_range = 0.0;
  std::uint64_t seed = 42;
  std::string output = "problem.json";
};

Problem<double> build_problem(const GenerateArgs& a) {
  Problem<double> p = [&] {
    if (a.model == "holder") return make_model_problem(a.eta, a.beta, a.n);
    SmoothnessSpec spec;
    spec.n = a.n;
    spec.kappa = a.kappa;
    if (a.model == "exp") {
      spec.kind = SmoothnessKind::exponential;
    } else if (a.model == "log") {
      spec.kind = SmoothnessKind::logarithmic;
    } else {
      throw CLI::ValidationError("--model", "unknown model '" + a.model + "'");
    }
    return make_spectral_problem(spec, a.beta);
  }();
  if (a.noise > 0 || a.off_range > 0) p = add_noise(p, {a.noise, a.seed, a.off_range});
  return p;
}

int cmd_generate(const GenerateArgs& a) {
  const auto p = build_problem(a);
  save_problem(a.output, p);
  if (p.meta.mu_star) std::cout << "mu_star = " << *p.meta.mu_star << '\n';
  if (p.delta_true) {
    std::cout << "delta = " << format_g17(*p.delta_true) << '\n';
    if (p.y_exact && p.y_exact->norm() > 0)
      std::cout << "relative_noise = " << *p.delta_true / p.y_exact->norm() << '\n';
  }
  std::cout << "wrote " << a.output << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
  std::string problem_path;
  std::string matrix_path;
  std::string sigma_path;
  std::string data_path;
  GridFlags grid;
  CgFlags cg;
  std::string output = "sweep.csv";
};

Problem<double> load_sweep_problem(const SweepArgs& a) {
  if (!a.problem_path.empty()) return load_problem(a.problem_path);
  if (!a.matrix_path.empty() && !a.sigma_path.empty())
    throw CLI::ValidationError("sweep", "--matrix and --sigma are mutually exclusive");
  if ((a.matrix_path.empty() && a.sigma_path.empty()) || a.data_path.empty())
    throw CLI::ValidationError("sweep", "need --problem, or --data with one of --matrix / --sigma");

  const auto y = load_vector_csv(a.data_path);
  Operator<double> op = [&]() -> Operator<double> {
    if (!a.matrix_path.empty()) {
      const auto m = load_matrix_market(a.matrix_path);
      if (y.size() != m.rows()) throw std::runtime_error("sweep: data length does not match matrix rows");
      return Operator<double>(DenseOperator<double>(m).normalized());
    }
    const auto sigma = load_vector_csv(a.sigma_path);
    if (y.size() != sigma.size())
      throw std::runtime_error("sweep: data length does not match the singular value list");
    return Operator<double>(DiagonalOperator<double>(sigma).normalized());
  }();
  const Index n = op.cols();
  Problem<double> p{std::move(op), std::nullopt, std::nullopt, y, std::nullopt, {}};
  p.meta.kind = "external";
  p.meta.n = n;
  return p;
}

int cmd_sweep(const SweepArgs& a) {
  const auto p = load_sweep_problem(a);
  const auto s = sweep(p, a.grid.grid(), a.cg.options());
  write_sweep_csv(a.output, s);
  std::cout << "wrote " << a.output << " (" << s.points.size() << " rows)\n";
  if (report_unconverged(s) > 0) return kExitNumerical;
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string sweep_path;
  std::string problem_path;
  double ynorm = 0.0;
  AnalysisFlags analysis;
  std::string output = "estimate.json";
};

json run_estimate(const Sweep<double>& s, double ynorm, const AnalysisFlags& flags,
                  const Problem<double>* truth) {
  const auto curve = residual_curve(s);
  if (curve.dropped_points > 0)
    std::cerr << "warning: " << curve.dropped_points << " zero-residual points excluded\n";
  const auto seg = segment_stages(curve, ynorm, flags.seg);
  const auto noise = estimate_noise(curve, seg, flags.saddle_tol);
  const auto smooth = estimate_smoothness(curve, seg, flags.smooth,
                                          noise.found ? noise.delta_hat
                                                      : std::numeric_limits<double>::quiet_NaN());

  json j;
  j["segmentation"] = segmentation_to_json(seg);
  j["smoothness"] = smoothness_to_json(smooth);
  j["noise"] = noise_to_json(noise);
  if (truth) {
    json t;
    t["mu_star"] = detail::opt_json(truth->meta.mu_star);
    t["delta_true"] = detail::opt_json(truth->delta_true);
    if (truth->meta.mu_star && std::isfinite(smooth.mu)) t["mu_error"] = smooth.mu - *truth->meta.mu_star;
    if (truth->delta_true && *truth->delta_true > 0 && noise.found)
      t["delta_rel_error"] = (noise.delta_hat - *truth->delta_true) / *truth->delta_true;
    j["truth"] = t;
  }
  return j;
}

int cmd_estimate(const EstimateArgs& a) {
  const auto s = read_sweep_csv(a.sweep_path);
  std::optional<Problem<double>> truth;
  if (!a.problem_path.empty()) truth = load_problem(a.problem_path);

  double ynorm = a.ynorm;
  if (ynorm <= 0) ynorm = truth ? truth->data_norm() : s.data_norm;

  const json j = run_estimate(s, ynorm, a.analysis, truth ? &*truth : nullptr);
  write_json_file(a.output, j);

  const auto& sm = j["smoothness"];
  std::cout << "classification = " << sm["classification"].get<std::string>() << '\n';
  if (sm["mu"].is_number() && std::isfinite(sm["mu"].get<double>()))
    std::cout << "mu = " << sm["mu"].get<double>() << '\n';
  if (j["noise"].contains("delta_hat") && j["noise"]["delta_hat"].is_number())
    std::cout << "delta_hat = " << j["noise"]["delta_hat"].get<double>() << '\n';
  else
    std::cout << "noise: " << j["noise"].value("reason", std::string("not estimated")) << '\n';
  std::cout << "wrote " << a.output << '\n';

  const bool mu_failed = sm["classification"].get<std::string>() == "noise_dominated";
  const bool noise_failed = !j["noise"].contains("delta_hat") || !j["noise"]["delta_hat"].is_number();
  if (mu_failed && noise_failed) return kExitNoEstimate;
  return kExitOk;
}

// ------------------------------------------------------------------ choose

struct ChooseArgs {
  std::string problem_path;
  std::string sweep_path;
  std::string rules = "oracle,dp:1.01,apriori,dp:1.1,heuristic_dp,rdm";
  GridFlags grid;
  CgFlags cg;
  std::string output = "choices.csv";
  std::string json_output;
};

std::vector<RuleSpec> parse_rules(const std::string& text) {
  std::vector<RuleSpec> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    RuleSpec spec{ChoiceRule::oracle, 1.01};
    std::string name = tok;
    if (const auto pos = tok.find(':'); pos != std::string::npos) {
      name = tok.substr(0, pos);
      spec.tau = std::stod(tok.substr(pos + 1));
    }
    if (name == "oracle") spec.rule = ChoiceRule::oracle;
    else if (name == "dp") spec.rule = ChoiceRule::dp;
    else if (name == "apriori") spec.rule = ChoiceRule::apriori;
    else if (name == "heuristic_dp") spec.rule = ChoiceRule::heuristic_dp;
    else if (name == "lcurve") spec.rule = ChoiceRule::lcurve;
    else if (name == "rdm") spec.rule = ChoiceRule::rdm;
    else throw CLI::ValidationError("--rules", "unknown rule '" + name + "'");
    out.push_back(spec);
  }
  if (out.empty()) throw CLI::ValidationError("--rules", "empty rule list");
  return out;
}

int cmd_choose(const ChooseArgs& a) {
  const auto rules = parse_rules(a.rules);
  std::vector<ChoiceResult> results;

  if (!a.problem_path.empty()) {
    const auto p = load_problem(a.problem_path);
    results = compare_rules(p, a.grid.grid(), rules, a.cg.options());
  } else if (!a.sweep_path.empty()) {
    // heuristic rules only: everything a stored sweep can support
    const auto s = read_sweep_csv(a.sweep_path);
    const auto curve = residual_curve(s);
    for (const auto& spec : rules) {
      ChoiceResult cr;
      cr.rule = spec.rule;
      cr.label = to_string(spec.rule);
      try {
        switch (spec.rule) {
          case ChoiceRule::heuristic_dp: cr.alpha = choose_heuristic_dp(s); break;
          case ChoiceRule::rdm: cr.alpha = choose_rdm(curve); break;
          case ChoiceRule::lcurve: {
            const auto corner = choose_lcurve(s);
            cr.corner_curvature = corner.curvature;
            if (!corner.found) throw std::runtime_error("lcurve: no corner");
            cr.alpha = corner.alpha;
            break;
          }
          default:
            throw std::runtime_error(std::string(to_string(spec.rule)) + ": requires --problem");
        }
        cr.ok = true;
      } catch (const std::exception& e) {
        cr.ok = false;
        cr.message = e.what();
      }
      results.push_back(std::move(cr));
    }
  } else {
    throw CLI::ValidationError("choose", "need --problem or --sweep");
  }

  write_choice_csv(a.output, results);
  std::cout << "wrote " << a.output << '\n';
  if (!a.json_output.empty()) {
    json arr = json::array();
    for (const auto& r : results) arr.push_back(choice_to_json(r));
    write_json_file(a.json_output, arr);
    std::cout << "wrote " << a.json_output << '\n';
  }
  for (const auto& r : results) {
    if (r.ok)
      std::cout << r.label << ": alpha = " << format_g17(r.alpha) << '\n';
    else
      std::cout << r.label << ": failed (" << r.message << ")\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------- reproduce

struct ReproduceArgs {
  std::string preset;
  std::uint64_t seed = 42;
  std::string out_dir;
};

fs::path preset_dir(const ReproduceArgs& a) {
  const std::string config = "preset=" + a.preset + "\nseed=" + std::to_string(a.seed) + "\n";
  if (!a.out_dir.empty()) {
    fs::path dir = fs::path(a.out_dir);
    fs::create_directories(dir);
    return dir;
  }
  return run_directory(config);
}

void emit_curve_bundle(const fs::path& dir, const std::string& stem, const Problem<double>& p,
                       const AlphaGrid& grid, bool with_estimate) {
  const auto s = sweep(p, grid);
  write_sweep_csv((dir / (stem + "_sweep.csv")).string(), s);
  const auto curve = residual_curve(s);
  write_curve_csv((dir / (stem + "_curve.csv")).string(), curve);
  if (with_estimate) {
    AnalysisFlags flags;
    const json j = run_estimate(s, p.data_norm(), flags, &p);
    write_json_file(dir / (stem + "_estimate.json"), j);
  }
}

int preset_fig1(const ReproduceArgs& a, const fs::path& dir) {
  // all four residual stages: the grid starts in the burn-in region and ends
  // below the discrete noise floor
  auto p = add_noise(make_model_problem(2.0, 2.0, 4096), {0.005, a.seed});
  save_problem((dir / "problem.json").string(), p);
  emit_curve_bundle(dir, "fig1", p, {100.0, std::pow(10.0, -0.1), 181}, false);
  return kExitOk;
}

int preset_fig2(const ReproduceArgs& a, const fs::path& dir) {
  auto p = add_noise(make_model_problem(2.0, 2.0, 4096), {0.005, a.seed});
  emit_curve_bundle(dir, "fig2", p, {100.0, std::pow(10.0, -0.1), 181}, true);
  return kExitOk;
}

int preset_fig34(const ReproduceArgs& a, const fs::path& dir, SmoothnessKind kind) {
  SmoothnessSpec spec;
  spec.kind = kind;
  spec.kappa = kind == SmoothnessKind::exponential ? 2.0 : 1.5;
  spec.n = 4096;
  const std::string stem = kind == SmoothnessKind::exponential ? "fig3" : "fig4";
  const double rel = kind == SmoothnessKind::exponential ? 0.005 : 0.001;
  auto clean = make_spectral_problem(spec, 2.0);
  emit_curve_bundle(dir, stem + "_noisefree", clean, {}, true);
  emit_curve_bundle(dir, stem + "_noisy", add_noise(clean, {rel, a.seed}), {}, true);
  return kExitOk;
}

int preset_table1(const ReproduceArgs& a, const fs::path& dir) {
  auto p = add_noise(make_model_problem(2.0, 2.0, 4096), {0.005, a.seed});
  const auto results = compare_rules(p, {});
  write_choice_csv((dir / "table1.csv").string(), results);
  json arr = json::array();
  for (const auto& r : results) arr.push_back(choice_to_json(r));
  write_json_file(dir / "table1.json", json{{"seed", a.seed}, {"rules", arr}});
  for (const auto& r : results) {
    std::cout << r.label << ": ";
    if (r.ok) {
      std::cout << "alpha = " << format_g17(r.alpha);
      if (r.error_ratio) std::cout << ", err_ratio = " << *r.error_ratio;
    } else {
      std::cout << "failed (" << r.message << ")";
    }
    std::cout << '\n';
  }
  return kExitOk;
}

int preset_rates(const ReproduceArgs& a, const fs::path& dir) {
  const auto base = make_model_problem(2.0, 2.0, 4096);
  const AlphaGrid grid{};
  const std::vector<double> levels{0.02, 0.01, 0.005, 0.0025, 0.00125};

  std::ofstream csv(dir / "rates.csv");
  csv << "delta,alpha_dp,error\n";
  std::vector<double> ld, le;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto p = add_noise(base, {levels[i], a.seed + i});
    const auto s = sweep(p, grid);
    const double alpha = choose_discrepancy(p, s, *p.delta_true, 1.01);
    const auto pt = tikhonov_solve(p, alpha);
    const double err = (pt.x - *p.x_true).norm();
    csv << format_g17(*p.delta_true) << ',' << format_g17(alpha) << ',' << format_g17(err) << '\n';
    ld.push_back(std::log(*p.delta_true));
    le.push_back(std::log(err));
  }

  // least-squares slope of log error against log delta
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ld.size());
  for (std::size_t i = 0; i < ld.size(); ++i) {
    sx += ld[i]; sy += le[i]; sxx += ld[i] * ld[i]; sxy += ld[i] * le[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double mu = 0.375;
  write_json_file(dir / "rates.json",
                  json{{"slope", slope}, {"expected", 2 * mu / (2 * mu + 1)}, {"seed", a.seed}});
  std::cout << "rate slope = " << slope << " (expected " << 2 * mu / (2 * mu + 1) << ")\n";
  return kExitOk;
}

int cmd_reproduce(const ReproduceArgs& a) {
  const fs::path dir = preset_dir(a);
  int rc;
  if (a.preset == "fig1") rc = preset_fig1(a, dir);
  else if (a.preset == "fig2") rc = preset_fig2(a, dir);
  else if (a.preset == "fig3") rc = preset_fig34(a, dir, SmoothnessKind::exponential);
  else if (a.preset == "fig4") rc = preset_fig34(a, dir, SmoothnessKind::logarithmic);
  else if (a.preset == "table1") rc = preset_table1(a, dir);
  else if (a.preset == "rates") rc = preset_rates(a, dir);
  else throw CLI::ValidationError("preset", "unknown preset '" + a.preset + "'");
  std::cout << "artifacts in " << dir.string() << '\n';
  return rc;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Tikhonov residual-curve analysis: solve, trace, estimate, choose"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Build a problem instance and write it as JSON");
  attach_config(generate);
  generate->add_option("--model", gen.model, "holder | exp | log")->capture_default_str();
  generate->add_option("--eta", gen.eta, "Solution decay exponent (holder)")->capture_default_str();
  generate->add_option("--beta", gen.beta, "Singular value decay exponent")->capture_default_str();
  generate->add_option("--kappa", gen.kappa, "Rate for exp/log models")->capture_default_str();
  generate->add_option("--n", gen.n, "Problem dimension")->capture_default_str();
  generate->add_option("--noise", gen.noise, "Relative noise level")->capture_default_str();
  generate->add_option("--off-range", gen.off_range, "Fraction of noise energy outside the range")
      ->capture_default_str();
  generate->add_option("--seed", gen.seed, "Noise seed")->capture_default_str();
  generate->add_option("-o,--output", gen.output, "Output JSON path")->capture_default_str();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a Tikhonov sweep and write the residual CSV");
  attach_config(sweep_cmd);
  sweep_cmd->add_option("--problem", sw.problem_path, "Problem JSON from 'generate'");
  sweep_cmd->add_option("--matrix", sw.matrix_path, "Matrix Market (.mtx) operator");
  sweep_cmd->add_option("--sigma", sw.sigma_path, "One-column CSV of singular values (diagonal operator)");
  sweep_cmd->add_option("--data", sw.data_path, "One-column CSV datum");
  sw.grid.attach(sweep_cmd);
  sw.cg.attach(sweep_cmd);
  sweep_cmd->add_option("-o,--output", sw.output, "Output CSV path")->capture_default_str();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Segment a sweep and estimate smoothness and noise");
  attach_config(estimate);
  estimate->add_option("--sweep", est.sweep_path, "Sweep CSV")->required();
  estimate->add_option("--problem", est.problem_path, "Problem JSON for a truth-vs-estimate report");
  estimate->add_option("--ynorm", est.ynorm, "Override for the data norm");
  est.analysis.attach(estimate);
  estimate->add_option("-o,--output", est.output, "Output JSON path")->capture_default_str();

  ChooseArgs ch;
  auto* choose = app.add_subcommand("choose", "Evaluate regularization parameter choice rules");
  attach_config(choose);
  choose->add_option("--problem", ch.problem_path, "Problem JSON (full rule set)");
  choose->add_option("--sweep", ch.sweep_path, "Sweep CSV (heuristic rules only)");
  choose->add_option("--rules", ch.rules, "Comma list, dp takes dp:<tau>")->capture_default_str();
  ch.grid.attach(choose);
  ch.cg.attach(choose);
  choose->add_option("-o,--output", ch.output, "Output CSV path")->capture_default_str();
  choose->add_option("--json", ch.json_output, "Optional JSON output with diagnostics");

  ReproduceArgs rep;
  auto* reproduce = app.add_subcommand("reproduce", "Run a bundled experiment preset");
  reproduce->add_option("preset", rep.preset, "fig1 | fig2 | fig3 | fig4 | table1 | rates")->required();
  reproduce->add_option("--seed", rep.seed, "Noise seed")->capture_default_str();
  reproduce->add_option("-o,--out", rep.out_dir, "Output directory (default: hash-named run dir)");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config_args(args, app);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*sweep_cmd) return cmd_sweep(sw);
    if (*estimate) return cmd_estimate(est);
    if (*choose) return cmd_choose(ch);
    if (*reproduce) return cmd_reproduce(rep);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const std::string what = e.what();
    if (what.find("cannot open") != std::string::npos || what.find("parse") != std::string::npos)
      return kExitBadInput;
    return kExitNumerical;
  }
  return kExitBadInput;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace rescurve::cli
