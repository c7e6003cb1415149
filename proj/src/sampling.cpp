#include "elicit/sampling.hpp"

#include "elicit/distmodels.hpp"
#include "elicit/rng.hpp"

#include <cmath>
#include <numbers>

namespace elicit {
namespace {

void expect_count(const std::string& name, const std::vector<double>& p, std::size_t n) {
  if (p.size() != n) {
    throw DomainError(name + ": expected " + std::to_string(n) + " parameter(s), got " + std::to_string(p.size()));
  }
}

void expect(bool ok, const std::string& name, const std::string& what) {
  if (!ok) throw DomainError(name + ": " + what);
}

double draw_gamma(CounterRng& rng, double shape) {
  if (shape < 1.0) {
    // Boost to shape + 1 and scale back with U^(1/shape).
    const double g = draw_gamma(rng, shape + 1.0);
    return g * std::pow(rng.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

// Knuth's multiplication method for small means, Hormann's PTRS otherwise.
double draw_poisson(CounterRng& rng, double lambda) {
  if (lambda < 10.0) {
    const double limit = std::exp(-lambda);
    double prod = rng.uniform();
    int k = 0;
    while (prod > limit) {
      prod *= rng.uniform();
      ++k;
    }
    return k;
  }
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <= -lambda + k * loglam - std::lgamma(k + 1.0)) {
      return k;
    }
  }
}

double draw_binomial(CounterRng& rng, int trials, double p) {
  int hits = 0;
  for (int t = 0; t < trials; ++t) hits += rng.uniform() < p ? 1 : 0;
  return hits;
}

double draw_one(CounterRng& rng, const std::string& name, const std::vector<double>& p) {
  if (name == "normal") return p[0] + std::sqrt(p[1]) * rng.normal();
  if (name == "abs_normal") return std::abs(p[0] + std::sqrt(p[1]) * rng.normal());
  if (name == "sum_lognormal") {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); i += 2) s += std::exp(p[i] + std::sqrt(p[i + 1]) * rng.normal());
    return s;
  }
  switch (parse_family(name)) {
    case Family::poisson:
      return draw_poisson(rng, p[0]);
    case Family::chisq:
      return 2.0 * draw_gamma(rng, 0.5 * p[0]);
    case Family::exponential:
      return -p[0] * std::log(rng.uniform());
    case Family::gamma_fixed_shape:
      return p[1] * draw_gamma(rng, p[0]);
    case Family::binomial_fixed_trials:
      return draw_binomial(rng, static_cast<int>(p[0]), p[1]);
    case Family::gamma2:
      return p[1] * draw_gamma(rng, p[0]);
    case Family::beta2: {
      const double x = draw_gamma(rng, p[0]);
      const double y = draw_gamma(rng, p[1]);
      return x / (x + y);
    }
    case Family::lognormal:
      return std::exp(p[0] + std::sqrt(p[1]) * rng.normal());
    case Family::loglogistic: {
      const double u = rng.uniform();
      return p[0] * std::pow(u / (1.0 - u), 1.0 / p[1]);
    }
  }
  throw DomainError(name + ": unhandled template");
}

// Folded normal: E|Y|^k for Y ~ N(mu, var), k <= 3.
double abs_normal_moment(double mu, double var, int k) {
  if (var == 0.0) return std::pow(std::abs(mu), k);
  const double sd = std::sqrt(var);
  const double dens = sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mu * mu / (2.0 * var));
  const double sgn = std::erf(mu / (sd * std::numbers::sqrt2));
  switch (k) {
    case 1:
      return dens + mu * sgn;
    case 2:
      return mu * mu + var;
    default:
      return dens * (mu * mu + 2.0 * var) + mu * (mu * mu + 3.0 * var) * sgn;
  }
}

double binomial_coefficient(int n, int k) {
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
  return c;
}

}  // namespace

void validate_template(const std::string& name, const std::vector<double>& p) {
  for (double x : p) expect(std::isfinite(x), name, "parameters must be finite");
  if (name == "normal" || name == "abs_normal") {
    expect_count(name, p, 2);
    expect(p[1] >= 0.0, name, "variance must be >= 0");
    return;
  }
  if (name == "sum_lognormal") {
    expect(!p.empty() && p.size() % 2 == 0, name, "expects (u, v^2) pairs");
    for (std::size_t i = 1; i < p.size(); i += 2) expect(p[i] >= 0.0, name, "v^2 must be >= 0");
    return;
  }
  switch (parse_family(name)) {
    case Family::poisson:
    case Family::chisq:
    case Family::exponential:
      expect_count(name, p, 1);
      expect(p[0] > 0.0, name, "parameter must be > 0");
      return;
    case Family::gamma_fixed_shape:
    case Family::gamma2:
    case Family::beta2:
    case Family::loglogistic:
      expect_count(name, p, 2);
      expect(p[0] > 0.0 && p[1] > 0.0, name, "parameters must be > 0");
      return;
    case Family::binomial_fixed_trials:
      expect_count(name, p, 2);
      expect(p[0] >= 1.0 && p[0] == std::floor(p[0]), name, "trials must be a positive integer");
      expect(p[1] >= 0.0 && p[1] <= 1.0, name, "probability must lie in [0, 1]");
      return;
    case Family::lognormal:
      expect_count(name, p, 2);
      expect(p[1] >= 0.0, name, "v^2 must be >= 0");
      return;
  }
}

std::vector<double> sample(const SamplingTemplate& tpl) {
  validate_template(tpl.name, tpl.params);
  std::vector<double> out;
  out.reserve(tpl.n_samples);
  CounterRng rng = CounterRng::substream(tpl.seed, tpl.name);
  for (std::size_t i = 0; i < tpl.n_samples; ++i) out.push_back(draw_one(rng, tpl.name, tpl.params));
  return out;
}

Eigen::VectorXd template_moments(const std::string& name, const std::vector<double>& p, int order) {
  validate_template(name, p);
  if (order < 1) throw DomainError(name + ": moment order must be >= 1");
  Eigen::VectorXd m(order);
  if (name == "normal" || name == "abs_normal") {
    if (order > 3) throw DomainError(name + ": moments above order 3 not provided");
    const double mu = p[0], var = p[1];
    for (int k = 1; k <= order; ++k) {
      if (name == "abs_normal") {
        m[k - 1] = abs_normal_moment(mu, var, k);
      } else {
        m[k - 1] = k == 1 ? mu : k == 2 ? mu * mu + var : mu * mu * mu + 3.0 * mu * var;
      }
    }
    return m;
  }
  if (name == "sum_lognormal") {
    // Moments of a sum of independent terms: binomial convolution.
    std::vector<double> acc(order + 1, 0.0);
    acc[0] = 1.0;
    for (std::size_t i = 0; i + 1 < p.size(); i += 2) {
      std::vector<double> term(order + 1);
      for (int k = 0; k <= order; ++k) term[k] = std::exp(k * p[i] + 0.5 * k * k * p[i + 1]);
      std::vector<double> next(order + 1, 0.0);
      for (int k = 0; k <= order; ++k) {
        for (int j = 0; j <= k; ++j) next[k] += binomial_coefficient(k, j) * acc[j] * term[k - j];
      }
      acc = std::move(next);
    }
    for (int k = 1; k <= order; ++k) m[k - 1] = acc[k];
    return m;
  }
  const Family fam = parse_family(name);
  std::vector<double> fixed;
  Eigen::VectorXd theta;
  switch (fam) {
    case Family::gamma_fixed_shape:
    case Family::binomial_fixed_trials:
      fixed = {p[0]};
      theta = Eigen::VectorXd::Constant(1, p[1]);
      break;
    default:
      theta = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  }
  for (int k = 1; k <= order; ++k) m[k - 1] = raw_moment(fam, fixed, theta, k);
  return m;
}

}  // namespace elicit
