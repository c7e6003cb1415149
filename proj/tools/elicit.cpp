// elicit: run weight sweeps, classify 2-D cases, check the optimizer against a
// brute-force grid, and run the verification suites.

#include "elicit/experiment.hpp"
#include "elicit/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

using namespace elicit;

enum Exit : int { kOk = 0, kConfig = 1, kOptimization = 2, kVerification = 3 };

std::string vec(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << '(';
  for (int j = 0; j < v.size(); ++j) os << (j ? ", " : "") << format_double(v[j]);
  os << ')';
  return os.str();
}

int cmd_run(const std::string& path, const std::string& output) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  RunOutcome run;
  try {
    run = run_experiment(cfg);
  } catch (const ZeroMomentBase& e) {
    std::cerr << "config error: 'base_weights': " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kOptimization;
  }
  const std::filesystem::path dir = output.empty() ? std::filesystem::path(cfg.output) : std::filesystem::path(output);
  write_outputs(cfg, run, dir);
  const auto& r = run.report;
  std::cout << (cfg.name.empty() ? path : cfg.name) << ": gamma_hat " << format_double(run.curve.gamma_hat) << '\n';
  if (r["monotonicity"].contains("verdict")) std::cout << "  curve " << r["monotonicity"]["verdict"].get<std::string>() << '\n';
  if (r["best_weight"].contains("kind")) std::cout << "  best weight " << r["best_weight"]["kind"].get<std::string>() << '\n';
  if (r.contains("classification") && r["classification"].contains("case")) {
    std::cout << "  case " << r["classification"]["case"].get<std::string>() << '\n';
  }
  for (const auto& c : run.theory.checks) std::cout << "  " << c.name << ": " << verdict_name(c.verdict) << '\n';
  std::cout << "  wrote " << dir.string() << '\n';
  if (!run.curve.usable) {
    std::cerr << "optimization failed at " << format_double(100.0 * run.curve.failure_rate) << "% of points\n";
    return kOptimization;
  }
  return kOk;
}

int cmd_classify(const std::string& model_name, const std::vector<double>& params, const std::string& link_name_arg,
                 const std::vector<double>& interval, int n_grid, bool expect_uniform) {
  CaseClassification cls;
  try {
    if (interval.size() != 2) throw ConfigError("--interval takes a,b");
    const ParametricModel model = ParametricModel::make(model_name, params);
    cls = classify_2d_case(model, parse_link(link_name_arg), interval[0], interval[1], n_grid);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  if (cls.which == Case2D::mixed) {
    std::cout << "mixed;";
    for (double b : cls.boundaries) std::cout << " boundary r1=" << format_double(b);
    std::cout << '\n';
  } else {
    std::cout << "case " << case_name(cls.which) << "; R'-T' "
              << (cls.model_slope.front() > cls.contour_slope.front() ? "> 0" : "< 0") << " on ["
              << format_double(interval[0]) << "," << format_double(interval[1]) << "]\n";
  }
  for (const auto& s : cls.segments) {
    std::cout << "  [" << format_double(s.lo) << ", " << format_double(s.hi) << "] case " << case_name(s.which) << '\n';
  }
  return cls.which == Case2D::mixed && expect_uniform ? kVerification : kOk;
}

int cmd_oracle(const std::string& path, double width, const std::vector<double>& box_arg) {
  ExperimentConfig cfg;
  Experiment ex{ParametricModel::make(Family::poisson), Link::variance, {}, {}, {}, {}};
  try {
    cfg = load_config(path);
    ex = build_experiment(cfg);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  Eigen::VectorXd c = cfg.fixed_weights;
  c[cfg.sweep_index] = 1.0;
  const WeightVector w = ex.weights(c);
  Box box;
  if (box_arg.empty()) {
    box = default_box(ex.model, ex.em);
  } else {
    const int d = ex.model.theta_dim();
    if (static_cast<int>(box_arg.size()) != 2 * d) {
      std::cerr << "config error: --box takes lo,hi per coordinate\n";
      return kConfig;
    }
    box.lo.resize(d);
    box.hi.resize(d);
    for (int j = 0; j < d; ++j) {
      box.lo[j] = box_arg[2 * j];
      box.hi[j] = box_arg[2 * j + 1];
    }
  }
  Solution grid, opt;
  try {
    grid = meshgrid_oracle(ex.model, w, ex.em, ex.kinds, box, width);
  } catch (const EmptyGrid& e) {
    std::cerr << "EmptyGrid: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  try {
    opt = minimize(ex.model, w, ex.em, ex.kinds, ex.optimizer);
  } catch (const Error& e) {
    std::cerr << "optimizer failed: " << e.what() << '\n';
    return kOptimization;
  }
  auto gamma_of = [&](const Eigen::VectorXd& theta) {
    try {
      return link_value(ex.link, moments(ex.model, theta));
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  std::cout << "box lo " << vec(box.lo) << " hi " << vec(box.hi) << " width " << format_double(width) << '\n';
  std::cout << "oracle   theta " << vec(grid.theta_star) << " loss " << format_double(grid.loss) << " gamma "
            << format_double(gamma_of(grid.theta_star)) << '\n';
  std::cout << "minimize theta " << vec(opt.theta_star) << " loss " << format_double(opt.loss) << " gamma "
            << format_double(gamma_of(opt.theta_star)) << '\n';
  for (const auto& s : opt.starts) {
    std::cout << "  start " << vec(s.start) << " -> theta " << vec(s.theta) << " loss " << format_double(s.loss)
              << " gamma " << format_double(gamma_of(s.theta)) << (s.converged ? "" : " (not converged)") << '\n';
  }
  const bool ok = opt.loss <= grid.loss + 1e-9 * (1.0 + std::abs(grid.loss));
  std::cout << (ok ? "optimizer <= oracle" : "optimizer above oracle") << '\n';
  return ok ? kOk : kVerification;
}

int cmd_verify(const std::string& suite, const std::string& config_dir) {
  try {
    const SuiteResult res = run_suite(suite, config_dir);
    std::cout << res.to_json().dump(2) << '\n';
    return res.passed() ? kOk : kVerification;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indirect property elicitation through weighted moment losses"};
  app.require_subcommand(1);

  std::string run_path, run_output;
  auto* run = app.add_subcommand("run", "Sweep one weight and write curve.csv, manifest.json, report.json");
  run->add_option("config", run_path, "Experiment config (JSON)")->required();
  run->add_option("--output", run_output, "Output directory (overrides the config)");

  std::string model, link = "variance";
  std::vector<double> params, interval;
  int n_grid = 200;
  bool expect_uniform = false;
  auto* classify = app.add_subcommand("classify", "Classify a one-parameter model into case a, b, c or mixed");
  classify->add_option("--model", model, "Model name")->required();
  classify->add_option("--param", params, "Fixed model parameter (repeatable)");
  classify->add_option("--link", link, "Link name")->capture_default_str();
  classify->add_option("--interval", interval, "r1 interval a,b")->required()->delimiter(',')->expected(2);
  classify->add_option("--n-grid", n_grid, "Grid points")->capture_default_str()->check(CLI::PositiveNumber);
  classify->add_flag("--expect-uniform", expect_uniform, "Exit 3 when the case is mixed");

  std::string oracle_path;
  double width = 0.1;
  std::vector<double> box;
  auto* oracle = app.add_subcommand("oracle", "Compare minimize against the meshgrid oracle at unit weights");
  oracle->add_option("config", oracle_path, "Experiment config (JSON)")->required();
  oracle->add_option("--width", width, "Grid width")->required();
  oracle->add_option("--box", box, "lo,hi per coordinate")->delimiter(',');

  std::string suite = "all", config_dir = ELICIT_CONFIG_DIR;
  auto* verify = app.add_subcommand("verify", "Run a verification suite and print a JSON summary");
  verify->add_option("suite", suite, "jacobians | identities | sweeps | all")->capture_default_str();
  verify->add_option("--configs", config_dir, "Directory of experiment configs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(run_path, run_output);
    if (*classify) return cmd_classify(model, params, link, interval, n_grid, expect_uniform);
    if (*oracle) return cmd_oracle(oracle_path, width, box);
    if (*verify) return cmd_verify(suite, config_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOptimization;
  }
  return kConfig;
}
