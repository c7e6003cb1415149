#include "elicit/experiment.hpp"

#include "elicit/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace elicit {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + join(path, key) + "'");
  return obj.at(key);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("'" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) throw ConfigError("unknown key '" + join(path, k) + "'");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError("'" + path + "' must be a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError("'" + path + "' must be an integer");
  return j.get<long long>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError("'" + path + "' must be a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("'" + path + "' must be an array of numbers");
  std::vector<double> out;
  for (std::size_t q = 0; q < j.size(); ++q) out.push_back(number(j[q], path + "[" + std::to_string(q) + "]"));
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

SubLoss parse_sub_loss(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "squared") return SubLoss::squared();
    throw ConfigError("'" + path + "' must be \"squared\" or {\"asymmetric_squared\": [a, b]}");
  }
  if (j.is_object()) {
    only_keys(j, path, {"asymmetric_squared"});
    const auto ab = numbers(require(j, "asymmetric_squared", path), join(path, "asymmetric_squared"));
    if (ab.size() != 2) throw ConfigError("'" + join(path, "asymmetric_squared") + "' needs [a, b]");
    try {
      return SubLoss::asymmetric(ab[0], ab[1]);
    } catch (const DomainError& e) {
      throw ConfigError("'" + join(path, "asymmetric_squared") + "': " + e.what());
    }
  }
  throw ConfigError("'" + path + "' has an invalid sub-loss");
}

json sub_loss_json(const SubLoss& s) {
  if (s.kind == SubLoss::Kind::squared) return "squared";
  return json{{"asymmetric_squared", {s.below, s.above}}};
}

OptimizerConfig parse_optimizer(const json& j, int theta_dim) {
  const std::string p = "optimizer";
  require_object(j, p);
  only_keys(j, p, {"method", "max_iters", "tol_loss", "tol_step", "multistart", "init", "seed", "meshgrid_width"});
  OptimizerConfig o;
  if (j.contains("method")) {
    try {
      o.method = parse_method(text(j["method"], p + ".method"));
    } catch (const ConfigError& e) {
      throw ConfigError("'optimizer.method': " + std::string(e.what()));
    }
  }
  if (j.contains("max_iters")) o.max_iters = static_cast<int>(integer(j["max_iters"], p + ".max_iters"));
  if (j.contains("tol_loss")) o.tol_loss = number(j["tol_loss"], p + ".tol_loss");
  if (j.contains("tol_step")) o.tol_step = number(j["tol_step"], p + ".tol_step");
  if (j.contains("multistart")) o.multistart = static_cast<int>(integer(j["multistart"], p + ".multistart"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("'optimizer.seed' must be a non-negative integer");
    }
    o.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("meshgrid_width")) o.meshgrid_width = number(j["meshgrid_width"], p + ".meshgrid_width");
  if (j.contains("init")) {
    const json& init = j["init"];
    const std::string ip = p + ".init";
    if (init.is_string()) {
      const std::string kind = init.get<std::string>();
      if (kind == "moment_match") {
        o.init.kind = InitSpec::Kind::moment_match;
      } else if (kind == "meshgrid_min") {
        o.init.kind = InitSpec::Kind::meshgrid_min;
      } else {
        throw ConfigError("'" + ip + "' must be moment_match, meshgrid_min or {\"explicit\": [...]}");
      }
    } else if (init.is_object()) {
      only_keys(init, ip, {"explicit"});
      const json& pts = require(init, "explicit", ip);
      if (!pts.is_array() || pts.empty()) throw ConfigError("'" + ip + ".explicit' must be a non-empty array");
      o.init.kind = InitSpec::Kind::explicit_points;
      for (std::size_t q = 0; q < pts.size(); ++q) {
        const std::string pp = ip + ".explicit[" + std::to_string(q) + "]";
        const auto v = numbers(pts[q], pp);
        if (static_cast<int>(v.size()) != theta_dim) {
          throw ConfigError("'" + pp + "' must have " + std::to_string(theta_dim) + " coordinates");
        }
        o.init.points.push_back(to_vector(v));
      }
    } else {
      throw ConfigError("'" + ip + "' has an invalid value");
    }
  }
  try {
    o.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("'optimizer': " + std::string(e.what()));
  }
  return o;
}

json optimizer_json(const OptimizerConfig& o) {
  json init;
  if (o.init.kind == InitSpec::Kind::explicit_points) {
    json pts = json::array();
    for (const auto& p : o.init.points) pts.push_back(to_std(p));
    init = json{{"explicit", pts}};
  } else {
    init = std::string(init_kind_name(o.init.kind));
  }
  return json{{"method", std::string(method_name(o.method))},
              {"max_iters", o.max_iters},
              {"tol_loss", o.tol_loss},
              {"tol_step", o.tol_step},
              {"multistart", o.multistart},
              {"init", init},
              {"seed", o.seed},
              {"meshgrid_width", o.meshgrid_width}};
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "");
  only_keys(doc, "", {"name", "model", "template", "analytic", "explicit", "link", "sub_losses", "base_weights",
                      "sweep", "optimizer", "output"});
  ExperimentConfig cfg;
  if (doc.contains("name")) cfg.name = text(doc["name"], "name");

  const json& model = require(doc, "model", "");
  require_object(model, "model");
  only_keys(model, "model", {"name", "fixed_params"});
  cfg.model = text(require(model, "name", "model"), "model.name");
  if (!is_model_family(cfg.model)) throw ConfigError("'model.name' has unknown model '" + cfg.model + "'");
  if (model.contains("fixed_params")) cfg.fixed_params = numbers(model["fixed_params"], "model.fixed_params");
  std::optional<ParametricModel> pm;
  try {
    pm = ParametricModel::make(cfg.model, cfg.fixed_params);
  } catch (const Error& e) {
    throw ConfigError(std::string("'model.fixed_params': ") + e.what());
  }
  const int m = pm->moment_order();

  try {
    cfg.link = parse_link(text(require(doc, "link", ""), "link"));
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.rfind("'link'", 0) == 0 || msg.rfind("missing", 0) == 0 ? msg : "'link': " + msg);
  }
  if (link_order(cfg.link) != m) {
    throw ConfigError("'link': " + std::string(link_name(cfg.link)) + " needs " + std::to_string(link_order(cfg.link)) +
                      " moments but model " + cfg.model + " provides " + std::to_string(m));
  }

  const int sources = static_cast<int>(doc.contains("template")) + static_cast<int>(doc.contains("analytic")) +
                      static_cast<int>(doc.contains("explicit"));
  if (sources != 1) throw ConfigError("exactly one of 'template', 'analytic', 'explicit' is required");
  if (doc.contains("template")) {
    const json& t = doc["template"];
    require_object(t, "template");
    only_keys(t, "template", {"name", "params", "n_samples", "seed"});
    cfg.data.kind = DataSpec::Kind::sampled;
    cfg.data.tpl.name = text(require(t, "name", "template"), "template.name");
    cfg.data.tpl.params = numbers(require(t, "params", "template"), "template.params");
    if (t.contains("n_samples")) {
      const auto n = integer(t["n_samples"], "template.n_samples");
      if (n < 1) throw ConfigError("'template.n_samples' must be >= 1");
      cfg.data.tpl.n_samples = static_cast<std::size_t>(n);
    }
    if (t.contains("seed")) {
      if (!t["seed"].is_number_unsigned() && !t["seed"].is_number_integer()) {
        throw ConfigError("'template.seed' must be a non-negative integer");
      }
      cfg.data.tpl.seed = t["seed"].get<std::uint64_t>();
    }
    try {
      validate_template(cfg.data.tpl.name, cfg.data.tpl.params);
    } catch (const Error& e) {
      throw ConfigError(std::string("'template': ") + e.what());
    }
  } else if (doc.contains("analytic")) {
    const json& a = doc["analytic"];
    require_object(a, "analytic");
    only_keys(a, "analytic", {"name", "params"});
    cfg.data.kind = DataSpec::Kind::analytic;
    cfg.data.tpl.name = text(require(a, "name", "analytic"), "analytic.name");
    cfg.data.tpl.params = numbers(require(a, "params", "analytic"), "analytic.params");
    try {
      validate_template(cfg.data.tpl.name, cfg.data.tpl.params);
    } catch (const Error& e) {
      throw ConfigError(std::string("'analytic': ") + e.what());
    }
  } else {
    const json& e = doc["explicit"];
    require_object(e, "explicit");
    only_keys(e, "explicit", {"m_hat", "v_hat"});
    cfg.data.kind = DataSpec::Kind::explicit_moments;
    const auto mh = numbers(require(e, "m_hat", "explicit"), "explicit.m_hat");
    if (static_cast<int>(mh.size()) != m) throw ConfigError("'explicit.m_hat' must have " + std::to_string(m) + " entries");
    cfg.data.m_hat = to_vector(mh);
    if (e.contains("v_hat")) {
      const auto vh = numbers(e["v_hat"], "explicit.v_hat");
      if (vh.size() != mh.size()) throw ConfigError("'explicit.v_hat' must match 'explicit.m_hat' in length");
      for (double v : vh) {
        if (!(v >= 0.0)) throw ConfigError("'explicit.v_hat' entries must be >= 0");
      }
      cfg.data.v_hat = to_vector(vh);
    }
  }

  if (doc.contains("sub_losses")) {
    const json& s = doc["sub_losses"];
    if (!s.is_array() || static_cast<int>(s.size()) != m) {
      throw ConfigError("'sub_losses' must be an array of " + std::to_string(m) + " entries");
    }
    for (std::size_t q = 0; q < s.size(); ++q) cfg.sub_losses.push_back(parse_sub_loss(s[q], "sub_losses[" + std::to_string(q) + "]"));
  } else {
    cfg.sub_losses.assign(m, SubLoss::squared());
  }

  if (doc.contains("base_weights")) {
    const std::string b = text(doc["base_weights"], "base_weights");
    if (b == "ones") {
      cfg.base = BaseWeights::ones;
    } else if (b == "rhat_squared") {
      cfg.base = BaseWeights::rhat_squared;
    } else {
      throw ConfigError("'base_weights' must be ones or rhat_squared");
    }
  }

  const json& sweep = require(doc, "sweep", "");
  require_object(sweep, "sweep");
  only_keys(sweep, "sweep", {"index", "fixed_weights", "grid", "warm_start"});
  const auto idx = integer(require(sweep, "index", "sweep"), "sweep.index");
  if (idx < 1 || idx > m) throw ConfigError("'sweep.index' must be in 1.." + std::to_string(m));
  cfg.sweep_index = static_cast<int>(idx - 1);
  if (sweep.contains("fixed_weights")) {
    const auto w = numbers(sweep["fixed_weights"], "sweep.fixed_weights");
    if (static_cast<int>(w.size()) != m) throw ConfigError("'sweep.fixed_weights' must have " + std::to_string(m) + " entries");
    for (std::size_t q = 0; q < w.size(); ++q) {
      if (static_cast<int>(q) != cfg.sweep_index && !(w[q] >= 0.0 && std::isfinite(w[q]))) {
        throw ConfigError("'sweep.fixed_weights' entries must be finite and >= 0");
      }
    }
    cfg.fixed_weights = to_vector(w);
  } else {
    cfg.fixed_weights = Eigen::VectorXd::Ones(m);
  }
  cfg.fixed_weights[cfg.sweep_index] = 1.0;
  {
    Eigen::VectorXd others = cfg.fixed_weights;
    others[cfg.sweep_index] = 0.0;
    if ((others.array() == 0.0).all()) throw ConfigError("'sweep.fixed_weights' must keep a positive weight off the swept index");
  }
  if (sweep.contains("grid")) {
    const json& g = sweep["grid"];
    require_object(g, "sweep.grid");
    only_keys(g, "sweep.grid", {"lo", "hi", "points"});
    if (g.contains("lo")) cfg.grid_lo = number(g["lo"], "sweep.grid.lo");
    if (g.contains("hi")) cfg.grid_hi = number(g["hi"], "sweep.grid.hi");
    if (g.contains("points")) cfg.grid_points = static_cast<int>(integer(g["points"], "sweep.grid.points"));
    if (!(cfg.grid_lo > 0.0) || !(cfg.grid_hi > cfg.grid_lo) || cfg.grid_points < 2) {
      throw ConfigError("'sweep.grid' needs 0 < lo < hi and points >= 2");
    }
  }
  if (sweep.contains("warm_start")) {
    if (!sweep["warm_start"].is_boolean()) throw ConfigError("'sweep.warm_start' must be a boolean");
    cfg.warm_start = sweep["warm_start"].get<bool>();
  }

  if (doc.contains("optimizer")) {
    try {
      cfg.optimizer = parse_optimizer(doc["optimizer"], pm->theta_dim());
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("'optimizer': ") + e.what());
    }
  }
  for (std::size_t q = 0; q < cfg.optimizer.init.points.size(); ++q) {
    if (!pm->in_domain(cfg.optimizer.init.points[q])) {
      throw ConfigError("'optimizer.init.explicit[" + std::to_string(q) + "]' lies outside the model domain");
    }
  }
  if (doc.contains("output")) cfg.output = text(doc["output"], "output");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json resolved_config(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["model"] = {{"name", cfg.model}, {"fixed_params", cfg.fixed_params}};
  switch (cfg.data.kind) {
    case DataSpec::Kind::sampled:
      j["template"] = {{"name", cfg.data.tpl.name},
                       {"params", cfg.data.tpl.params},
                       {"n_samples", cfg.data.tpl.n_samples},
                       {"seed", cfg.data.tpl.seed}};
      break;
    case DataSpec::Kind::analytic:
      j["analytic"] = {{"name", cfg.data.tpl.name}, {"params", cfg.data.tpl.params}};
      break;
    case DataSpec::Kind::explicit_moments:
      j["explicit"] = {{"m_hat", to_std(cfg.data.m_hat)},
                       {"v_hat", to_std(cfg.data.v_hat.value_or(Eigen::VectorXd::Zero(cfg.data.m_hat.size())))}};
      break;
  }
  j["link"] = std::string(link_name(cfg.link));
  json subs = json::array();
  for (const auto& s : cfg.sub_losses) subs.push_back(sub_loss_json(s));
  j["sub_losses"] = subs;
  j["base_weights"] = cfg.base == BaseWeights::ones ? "ones" : "rhat_squared";
  j["sweep"] = {{"index", cfg.sweep_index + 1},
                {"fixed_weights", to_std(cfg.fixed_weights)},
                {"grid", {{"lo", cfg.grid_lo}, {"hi", cfg.grid_hi}, {"points", cfg.grid_points}}},
                {"warm_start", cfg.warm_start}};
  j["optimizer"] = optimizer_json(cfg.optimizer);
  j["output"] = cfg.output;
  return j;
}

EmpiricalMoments build_moments(const ExperimentConfig& cfg) {
  const int m = link_order(cfg.link);
  switch (cfg.data.kind) {
    case DataSpec::Kind::sampled: {
      const auto xs = sample(cfg.data.tpl);
      EmpiricalMoments em = empirical_moments(xs, m);
      em.provenance = SampledProvenance{cfg.data.tpl.name, cfg.data.tpl.params, cfg.data.tpl.n_samples, cfg.data.tpl.seed};
      return em;
    }
    case DataSpec::Kind::analytic:
      return analytic_moments(cfg.data.tpl.name, cfg.data.tpl.params, m);
    case DataSpec::Kind::explicit_moments:
      return explicit_moments(cfg.data.m_hat, cfg.data.v_hat);
  }
  throw ConfigError("unknown data source");
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  const ParametricModel model = ParametricModel::make(cfg.model, cfg.fixed_params);
  EmpiricalMoments em = build_moments(cfg);
  Eigen::VectorXd base = cfg.base == BaseWeights::ones ? Eigen::VectorXd::Ones(em.order()) : renormalize_base(em);
  Experiment ex{model, cfg.link, std::move(em), cfg.sub_losses, std::move(base), cfg.optimizer};
  ex.validate();
  return ex;
}

SweepSpec build_sweep(const ExperimentConfig& cfg) {
  SweepSpec spec;
  spec.index = cfg.sweep_index;
  spec.fixed_weights = cfg.fixed_weights;
  spec.grid = SweepSpec::log_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_points);
  spec.warm_start = cfg.warm_start;
  return spec;
}

json to_json(const CheckResult& check) {
  json j{{"name", check.name},
         {"anchor", check.anchor},
         {"verdict", std::string(verdict_name(check.verdict))},
         {"witness", check.witness},
         {"tolerance", check.tolerance}};
  if (check.witness_index) j["witness_index"] = *check.witness_index;
  return j;
}

json to_json(const CaseClassification& cls) {
  json segs = json::array();
  for (const auto& s : cls.segments) segs.push_back({{"lo", s.lo}, {"hi", s.hi}, {"case", std::string(case_name(s.which))}});
  return json{{"case", std::string(case_name(cls.which))}, {"segments", segs}, {"boundaries", cls.boundaries}};
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  RunOutcome out;
  const Experiment ex = build_experiment(cfg);
  out.curve = run_sweep(ex, build_sweep(cfg));
  out.theory = analyze_curve(out.curve);

  json& r = out.report;
  r["name"] = cfg.name;
  r["gamma_hat"] = out.curve.gamma_hat;
  r["m_hat"] = to_std(ex.em.m_hat);
  r["v_hat"] = to_std(ex.em.v_hat);
  r["base_weights_k"] = to_std(ex.base);
  r["failure_rate"] = out.curve.failure_rate;
  r["usable"] = out.curve.usable;
  int clamped = 0;
  for (const auto& p : out.curve.points) clamped += p.solution.clamped ? 1 : 0;
  r["clamped_points"] = clamped;
  try {
    const auto mono = classify_monotonicity(out.curve);
    r["monotonicity"] = {{"verdict", std::string(monotonicity_name(mono.verdict))},
                         {"max_violation", mono.max_violation},
                         {"tolerance", mono.tolerance}};
  } catch (const Error& e) {
    r["monotonicity"] = {{"error", e.what()}};
  }
  try {
    const auto best = best_weight(out.curve);
    r["best_weight"] = {{"kind", std::string(best_kind_name(best.kind))},
                        {"c", std::isinf(best.c) ? json("inf") : json(best.c)},
                        {"gamma", best.gamma},
                        {"gap", best.gap}};
  } catch (const Error& e) {
    r["best_weight"] = {{"error", e.what()}};
  }
  json checks = json::array();
  for (const auto& c : out.theory.checks) checks.push_back(to_json(c));
  r["checks"] = checks;

  if (ex.model.theta_dim() == 1 && link_order(ex.link) == 2) {
    double lo = kInf, hi = -kInf;
    for (const auto& p : out.curve.points) {
      if (!p.usable()) continue;
      lo = std::min(lo, p.solution.r_star[0]);
      hi = std::max(hi, p.solution.r_star[0]);
    }
    if (lo <= hi) {
      try {
        json cls = to_json(classify_2d_case(ex.model, ex.link, lo, hi));
        cls["interval"] = {lo, hi};
        r["classification"] = cls;
      } catch (const Error& e) {
        r["classification"] = {{"error", e.what()}};
      }
    }
  }
  if (link_order(ex.link) == 3) {
    try {
      const auto fit = check_linear_trajectory(out.curve);
      r["linear_trajectory"] = {{"residual", fit.residual}, {"verdict", std::string(verdict_name(fit.verdict))}};
    } catch (const Error& e) {
      r["linear_trajectory"] = {{"error", e.what()}};
    }
  }
  return out;
}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string curve_csv(const SweepCurve& curve) {
  if (!curve.experiment) throw DomainError("curve carries no experiment");
  const int d = curve.experiment->model.theta_dim();
  const int m = curve.experiment->model.moment_order();
  std::ostringstream os;
  os << "c_value";
  for (int j = 1; j <= d; ++j) os << ",theta_" << j;
  for (int j = 1; j <= m; ++j) os << ",r_" << j;
  os << ",gamma,total_loss";
  for (int j = 1; j <= m; ++j) os << ",sub_loss_" << j;
  os << ",converged\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : curve.points) {
    const bool ok = p.error.empty();
    os << format_double(p.c);
    for (int j = 0; j < d; ++j) os << ',' << format_double(ok ? p.solution.theta_star[j] : nan);
    for (int j = 0; j < m; ++j) os << ',' << format_double(ok ? p.solution.r_star[j] : nan);
    os << ',' << format_double(p.gamma) << ',' << format_double(ok ? p.solution.loss : nan);
    for (int j = 0; j < m; ++j) os << ',' << format_double(ok ? p.solution.sub_losses[j] : nan);
    os << ',' << (p.usable() ? 1 : 0) << '\n';
  }
  return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_outputs(const ExperimentConfig& cfg, const RunOutcome& outcome, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest{{"config", resolved_config(cfg)},
                {"prng", std::string(CounterRng::kAlgorithm)},
                {"files", {"curve.csv", "report.json"}}};
  write_atomic(dir / "curve.csv", curve_csv(outcome.curve));
  write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  write_atomic(dir / "report.json", outcome.report.dump(2) + "\n");
}

}  // namespace elicit
