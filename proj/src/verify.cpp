#include "elicit/verify.hpp"

#include "elicit/experiment.hpp"
#include "elicit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace elicit {
namespace {

struct ModelCase {
  Family family;
  std::vector<double> fixed;
};

const std::vector<ModelCase>& all_models() {
  static const std::vector<ModelCase> models{
      {Family::poisson, {}},
      {Family::chisq, {}},
      {Family::exponential, {}},
      {Family::gamma_fixed_shape, {2.0}},
      {Family::binomial_fixed_trials, {10.0}},
      {Family::gamma2, {}},
      {Family::beta2, {}},
      {Family::lognormal, {}},
      {Family::loglogistic, {}},
  };
  return models;
}

std::vector<Eigen::VectorXd> interior_points(const ParametricModel& model, int count, std::uint64_t seed) {
  CounterRng rng = CounterRng::substream(seed, model.name());
  std::vector<Eigen::VectorXd> pts;
  for (int q = 0; q < count; ++q) {
    Eigen::VectorXd phi(model.theta_dim());
    for (int j = 0; j < phi.size(); ++j) phi[j] = -2.0 + 4.0 * rng.uniform();
    pts.push_back(model.to_constrained(phi));
  }
  return pts;
}

CheckResult make_check(std::string name, std::string anchor, bool ok, std::string witness, double tol) {
  CheckResult c;
  c.name = std::move(name);
  c.anchor = std::move(anchor);
  c.verdict = ok ? Verdict::pass : Verdict::fail;
  c.witness = std::move(witness);
  c.tolerance = tol;
  return c;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double expected_variance(const ParametricModel& m, double theta) {
  switch (m.family()) {
    case Family::poisson:
      return theta;
    case Family::chisq:
      return 2.0 * theta;
    case Family::exponential:
      return theta * theta;
    case Family::gamma_fixed_shape:
      return m.fixed_params()[0] * theta * theta;
    case Family::binomial_fixed_trials:
      return m.fixed_params()[0] * theta * (1.0 - theta);
    default:
      throw DomainError("no variance identity for " + m.name());
  }
}

}  // namespace

bool SuiteResult::passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.verdict == Verdict::fail; });
}

nlohmann::json SuiteResult::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) arr.push_back(elicit::to_json(c));
  return {{"suite", name}, {"passed", passed()}, {"checks", arr}};
}

const std::vector<std::string_view>& suite_names() {
  static const std::vector<std::string_view> names{"jacobians", "identities", "sweeps", "all"};
  return names;
}

SuiteResult verify_jacobians() {
  SuiteResult out{"jacobians", {}};
  constexpr double tol = 1e-5;
  for (const auto& mc : all_models()) {
    const ParametricModel model = ParametricModel::make(mc.family, mc.fixed);
    double worst = 0.0;
    for (const auto& theta : interior_points(model, 20, 0x1AC0B1)) {
      const Eigen::MatrixXd jac = moment_jacobian(model, theta);
      for (int j = 0; j < model.theta_dim(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
        Eigen::VectorXd up = theta, dn = theta;
        up[j] += h;
        dn[j] -= h;
        const Eigen::VectorXd fd = (moments(model, up) - moments(model, dn)) / (2.0 * h);
        for (int i = 0; i < fd.size(); ++i) {
          worst = std::max(worst, std::abs(jac(i, j) - fd[i]) / std::max(std::abs(jac(i, j)), 1e-8));
        }
      }
    }
    std::ostringstream os;
    os << "max relative error " << worst;
    out.checks.push_back(make_check(model.name() + ": jacobian", "closed-form moment derivatives", worst < tol, os.str(), tol));
  }
  return out;
}

SuiteResult verify_identities() {
  SuiteResult out{"identities", {}};
  for (const auto& mc : all_models()) {
    const ParametricModel model = ParametricModel::make(mc.family, mc.fixed);
    if (model.theta_dim() != 1) continue;
    double worst = 0.0;
    bool monotone = true;
    Eigen::VectorXd prev;
    for (int q = 0; q < 100; ++q) {
      Eigen::VectorXd phi(1);
      phi[0] = -5.0 + 10.0 * q / 99.0;
      const Eigen::VectorXd theta = model.to_constrained(phi);
      const Eigen::VectorXd r = moments(model, theta);
      worst = std::max(worst, rel_err(link_value(Link::variance, r), expected_variance(model, theta[0])));
      if (q > 0 && !(r[0] > prev[0] && r[1] > prev[1])) monotone = false;
      prev = r;
    }
    std::ostringstream os;
    os << "max relative error " << worst;
    out.checks.push_back(make_check(model.name() + ": variance identity", "known variance on exact moments",
                                    worst < 1e-12, os.str(), 1e-12));
    out.checks.push_back(make_check(model.name() + ": monotone moments", "strictly monotone model curve premise",
                                    monotone, monotone ? "r_1 and r_2 increase with theta" : "non-monotone step found", 0.0));
  }

  const ParametricModel logn = ParametricModel::make(Family::lognormal);
  double worst_skew = 0.0;
  for (double u : {-1.0, 0.0, 2.0}) {
    for (int q = 0; q < 50; ++q) {
      const double s = 0.25 + (9.0 - 0.25) * q / 49.0;
      Eigen::VectorXd theta(2);
      theta << u, s;
      const double closed = (std::exp(s) + 2.0) * std::sqrt(std::expm1(s));
      worst_skew = std::max(worst_skew, rel_err(link_value(Link::skewness, moments(logn, theta)), closed));
    }
  }
  {
    std::ostringstream os;
    os << "max relative error " << worst_skew;
    out.checks.push_back(make_check("lognormal: skewness identity", "lognormal skewness closed form",
                                    worst_skew < 1e-9, os.str(), 1e-9));
  }

  double worst_map = 0.0;
  for (int a = 0; a < 20; ++a) {
    for (int b = 0; b < 20; ++b) {
      const double u = -3.0 + 6.0 * a / 19.0;
      const double s = 9.0 * b / 19.0;
      const LogMap m = lognormal_log_map(u, s);
      Eigen::VectorXd theta(2);
      theta << u, s;
      const Eigen::VectorXd r = moments(logn, theta);
      const double fit = std::max({std::abs(std::log(r[0]) - m.x), std::abs(std::log(r[1]) - m.y),
                                   std::abs(std::log(r[2]) - m.z)});
      worst_map = std::max({worst_map, m.residual, fit});
    }
  }
  {
    std::ostringstream os;
    os << "max residual " << worst_map;
    out.checks.push_back(make_check("lognormal: log-map hyperplane", "3x - 3y + z = 0 on log moments",
                                    worst_map < 1e-9, os.str(), 1e-9));
  }
  const SkewApprox sa = lognormal_skew_approx(9.0);
  out.checks.push_back(make_check("lognormal: large-v^2 skew approximation", "e^{1.5 v^2} approximation",
                                  sa.rel_gap < 0.01, "relative gap " + std::to_string(sa.rel_gap) + " at v^2 = 9", 0.01));
  return out;
}

SuiteResult verify_sweeps(const std::filesystem::path& dir) {
  SuiteResult out{"sweeps", {}};
  if (!std::filesystem::is_directory(dir)) throw ConfigError("config directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string tag = f.stem().string();
    try {
      const ExperimentConfig cfg = load_config(f);
      const RunOutcome run = run_experiment(cfg);
      const bool one_param = run.curve.experiment->model.theta_dim() == 1;
      for (auto c : run.theory.checks) {
        if (c.name == "condition_A" && !one_param) continue;
        if (c.name == "condition_B") continue;
        c.name = tag + ": " + c.name;
        out.checks.push_back(std::move(c));
      }
      if (!run.curve.usable) {
        out.checks.push_back(make_check(tag + ": usable", "sweep failure rate", false,
                                        "failure rate " + std::to_string(run.curve.failure_rate), kMaxFailureRate));
      }
    } catch (const Error& e) {
      out.checks.push_back(make_check(tag + ": run", "experiment runs", false, e.what(), 0.0));
    }
  }
  return out;
}

SuiteResult run_suite(std::string_view name, const std::filesystem::path& config_dir) {
  if (name == "jacobians") return verify_jacobians();
  if (name == "identities") return verify_identities();
  if (name == "sweeps") return verify_sweeps(config_dir);
  if (name == "all") {
    SuiteResult all{"all", {}};
    for (auto part : {verify_jacobians(), verify_identities(), verify_sweeps(config_dir)}) {
      all.checks.insert(all.checks.end(), part.checks.begin(), part.checks.end());
    }
    return all;
  }
  throw ConfigError("unknown suite '" + std::string(name) + "'");
}

}  // namespace elicit
