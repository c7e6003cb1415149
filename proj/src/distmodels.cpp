#include "elicit/distmodels.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace elicit {
namespace {

constexpr std::array<std::pair<Family, std::string_view>, 9> kFamilyNames{{
    {Family::poisson, "poisson"},
    {Family::chisq, "chisq"},
    {Family::exponential, "exponential"},
    {Family::gamma_fixed_shape, "gamma_fixed_shape"},
    {Family::binomial_fixed_trials, "binomial_fixed_trials"},
    {Family::gamma2, "gamma2"},
    {Family::beta2, "beta2"},
    {Family::lognormal, "lognormal"},
    {Family::loglogistic, "loglogistic"},
}};

constexpr double kInteriorMargin = 1e-6;

Interval positive() { return Interval{0.0, kInf, false, false}; }

std::string describe_bound(const Interval& iv, bool lower) {
  std::ostringstream os;
  if (lower) {
    os << (iv.lo_closed ? ">= " : "> ") << iv.lo;
  } else {
    os << (iv.hi_closed ? "<= " : "< ") << iv.hi;
  }
  return os.str();
}

// prod_{j<k} (a + step*j)
double rising(double a, int k, double step = 1.0) {
  double p = 1.0;
  for (int j = 0; j < k; ++j) p *= a + step * j;
  return p;
}

// sum_{j<k} 1/(a + step*j)
double rising_log_derivative(double a, int k, double step = 1.0) {
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += 1.0 / (a + step * j);
  return s;
}

double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

void require_order(Family f, int k, int max_k) {
  if (k < 1 || k > max_k) {
    throw DomainError(std::string(family_name(f)) + ": moment order " + std::to_string(k) +
                      " not supported (1.." + std::to_string(max_k) + ")");
  }
}

double fixed_at(Family f, std::span<const double> fixed, std::size_t i) {
  if (i >= fixed.size()) {
    throw DomainError(std::string(family_name(f)) + ": missing fixed parameter " + std::to_string(i));
  }
  return fixed[i];
}

// x / sin(x) and its derivative, used by the log-logistic moments.
double x_over_sin(double x) { return x / std::sin(x); }
double x_over_sin_derivative(double x) {
  const double s = std::sin(x);
  return (s - x * std::cos(x)) / (s * s);
}

}  // namespace

std::string_view family_name(Family f) {
  for (const auto& [fam, name] : kFamilyNames) {
    if (fam == f) return name;
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (const auto& [fam, n] : kFamilyNames) {
    if (n == name) return fam;
  }
  throw ConfigError("unknown model family '" + std::string(name) + "'");
}

bool is_model_family(std::string_view name) {
  for (const auto& entry : kFamilyNames) {
    if (entry.second == name) return true;
  }
  return false;
}

bool Interval::contains(double x) const {
  if (std::isnan(x)) return false;
  const bool lo_ok = lo_closed ? x >= lo : x > lo;
  const bool hi_ok = hi_closed ? x <= hi : x < hi;
  return lo_ok && hi_ok;
}

double Interval::clamp_interior(double x) const {
  const double width = hi - lo;
  const double margin = std::isfinite(width) ? std::min(kInteriorMargin, kInteriorMargin * width)
                                             : kInteriorMargin * std::max(1.0, std::abs(std::isfinite(lo) ? lo : hi));
  if (std::isfinite(lo) && x <= lo) x = lo + margin;
  if (std::isfinite(hi) && x >= hi) x = hi - margin;
  return x;
}

bool CoordinateMap::is_identity() const { return !std::isfinite(domain.lo) && !std::isfinite(domain.hi); }

double CoordinateMap::to_unconstrained(double theta) const {
  const double x = domain.clamp_interior(theta);
  const bool has_lo = std::isfinite(domain.lo);
  const bool has_hi = std::isfinite(domain.hi);
  double phi = x;
  if (has_lo && has_hi) {
    const double p = (x - domain.lo) / (domain.hi - domain.lo);
    phi = std::log(p) - std::log1p(-p);
  } else if (has_lo) {
    phi = std::log(x - domain.lo);
  } else if (has_hi) {
    phi = std::log(domain.hi - x);
  }
  return clip(phi);
}

double CoordinateMap::to_constrained(double phi) const {
  phi = clip(phi);
  const bool has_lo = std::isfinite(domain.lo);
  const bool has_hi = std::isfinite(domain.hi);
  if (has_lo && has_hi) {
    return domain.lo + (domain.hi - domain.lo) / (1.0 + std::exp(-phi));
  }
  if (has_lo) return domain.lo + std::exp(phi);
  if (has_hi) return domain.hi - std::exp(phi);
  return phi;
}

double CoordinateMap::derivative(double phi) const {
  const bool has_lo = std::isfinite(domain.lo);
  const bool has_hi = std::isfinite(domain.hi);
  if (!is_identity() && std::abs(phi) > kBound) return 0.0;
  if (has_lo && has_hi) {
    const double s = 1.0 / (1.0 + std::exp(-phi));
    return (domain.hi - domain.lo) * s * (1.0 - s);
  }
  if (has_lo) return std::exp(phi);
  if (has_hi) return -std::exp(phi);
  return 1.0;
}

double CoordinateMap::clip(double phi) const {
  if (is_identity()) return phi;
  return std::clamp(phi, -kBound, kBound);
}

ParametricModel ParametricModel::make(Family family, std::vector<double> fixed) {
  const auto name = std::string(family_name(family));
  auto expect_fixed = [&](std::size_t n) {
    if (fixed.size() != n) {
      throw DomainError(name + ": expected " + std::to_string(n) + " fixed parameter(s), got " +
                        std::to_string(fixed.size()));
    }
  };
  switch (family) {
    case Family::poisson:
    case Family::chisq:
    case Family::exponential:
      expect_fixed(0);
      return ParametricModel(family, std::move(fixed), {positive()});
    case Family::gamma_fixed_shape:
      expect_fixed(1);
      if (!(fixed[0] > 0.0)) throw DomainError(name + ": shape K must be > 0");
      return ParametricModel(family, std::move(fixed), {positive()});
    case Family::binomial_fixed_trials:
      expect_fixed(1);
      if (!(fixed[0] >= 1.0) || fixed[0] != std::floor(fixed[0])) {
        throw DomainError(name + ": trials K must be a positive integer");
      }
      return ParametricModel(family, std::move(fixed), {Interval{0.0, 1.0, true, true}});
    case Family::gamma2:
    case Family::beta2:
      expect_fixed(0);
      return ParametricModel(family, std::move(fixed), {positive(), positive()});
    case Family::lognormal:
      expect_fixed(0);
      return ParametricModel(family, std::move(fixed), {Interval{}, Interval{0.0, kInf, true, false}});
    case Family::loglogistic:
      expect_fixed(0);
      // b > M + 0.5 keeps clear of the pole of the third moment at b = 3.
      return ParametricModel(family, std::move(fixed), {positive(), Interval{3.5, kInf, false, false}});
  }
  throw DomainError("unhandled family");
}

ParametricModel ParametricModel::make(std::string_view name, std::vector<double> fixed) {
  return make(parse_family(name), std::move(fixed));
}

bool ParametricModel::in_domain(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_dim()) return false;
  for (int j = 0; j < theta_dim(); ++j) {
    if (!domain_[j].contains(theta[j])) return false;
  }
  return true;
}

void ParametricModel::check_domain(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_dim()) {
    throw DomainError(name() + ": expected theta of dimension " + std::to_string(theta_dim()) + ", got " +
                      std::to_string(theta.size()));
  }
  for (int j = 0; j < theta_dim(); ++j) {
    const Interval& iv = domain_[j];
    const double x = theta[j];
    const bool lo_ok = iv.lo_closed ? x >= iv.lo : x > iv.lo;
    const bool hi_ok = iv.hi_closed ? x <= iv.hi : x < iv.hi;
    if (!lo_ok || std::isnan(x)) {
      std::ostringstream os;
      os << name() << ": theta[" << j << "] = " << x << " violates theta[" << j << "] " << describe_bound(iv, true);
      throw DomainError(os.str());
    }
    if (!hi_ok) {
      std::ostringstream os;
      os << name() << ": theta[" << j << "] = " << x << " violates theta[" << j << "] " << describe_bound(iv, false);
      throw DomainError(os.str());
    }
  }
}

Eigen::VectorXd ParametricModel::to_unconstrained(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd phi(theta_dim());
  for (int j = 0; j < theta_dim(); ++j) phi[j] = CoordinateMap{domain_[j]}.to_unconstrained(theta[j]);
  return phi;
}

Eigen::VectorXd ParametricModel::to_constrained(const Eigen::VectorXd& phi) const {
  Eigen::VectorXd theta(theta_dim());
  for (int j = 0; j < theta_dim(); ++j) theta[j] = CoordinateMap{domain_[j]}.to_constrained(phi[j]);
  return theta;
}

Eigen::VectorXd ParametricModel::reparam_derivative(const Eigen::VectorXd& phi) const {
  Eigen::VectorXd d(theta_dim());
  for (int j = 0; j < theta_dim(); ++j) d[j] = CoordinateMap{domain_[j]}.derivative(phi[j]);
  return d;
}

Eigen::VectorXd ParametricModel::clip_unconstrained(const Eigen::VectorXd& phi) const {
  Eigen::VectorXd out(theta_dim());
  for (int j = 0; j < theta_dim(); ++j) out[j] = CoordinateMap{domain_[j]}.clip(phi[j]);
  return out;
}

double raw_moment(Family family, std::span<const double> fixed, const Eigen::VectorXd& theta, int k) {
  switch (family) {
    case Family::poisson: {
      require_order(family, k, 3);
      const double t = theta[0];
      if (k == 1) return t;
      if (k == 2) return t + t * t;
      return t * t * t + 3.0 * t * t + t;
    }
    case Family::chisq:
      require_order(family, k, 64);
      return rising(theta[0], k, 2.0);
    case Family::exponential:
      require_order(family, k, 64);
      return factorial(k) * std::pow(theta[0], k);
    case Family::gamma_fixed_shape:
      require_order(family, k, 64);
      return std::pow(theta[0], k) * rising(fixed_at(family, fixed, 0), k);
    case Family::binomial_fixed_trials: {
      require_order(family, k, 3);
      const double n = fixed_at(family, fixed, 0);
      const double p = theta[0];
      if (k == 1) return n * p;
      if (k == 2) return n * p * (1.0 - p) + n * n * p * p;
      return n * p * (1.0 - 3.0 * p + 3.0 * n * p + 2.0 * p * p - 3.0 * n * p * p + n * n * p * p);
    }
    case Family::gamma2:
      require_order(family, k, 64);
      return std::pow(theta[1], k) * rising(theta[0], k);
    case Family::beta2: {
      require_order(family, k, 64);
      double r = 1.0;
      for (int j = 0; j < k; ++j) r *= (theta[0] + j) / (theta[0] + theta[1] + j);
      return r;
    }
    case Family::lognormal:
      require_order(family, k, 64);
      return std::exp(k * theta[0] + 0.5 * k * k * theta[1]);
    case Family::loglogistic: {
      require_order(family, k, 64);
      if (!(theta[1] > k)) {
        throw DomainError("loglogistic: E[X^" + std::to_string(k) + "] requires b > " + std::to_string(k));
      }
      const double x = k * std::numbers::pi / theta[1];
      return std::pow(theta[0], k) * x_over_sin(x);
    }
  }
  throw DomainError("unhandled family");
}

Eigen::VectorXd raw_moment_gradient(Family family, std::span<const double> fixed, const Eigen::VectorXd& theta,
                                    int k) {
  Eigen::VectorXd g(theta.size());
  switch (family) {
    case Family::poisson: {
      require_order(family, k, 3);
      const double t = theta[0];
      g[0] = k == 1 ? 1.0 : k == 2 ? 1.0 + 2.0 * t : 3.0 * t * t + 6.0 * t + 1.0;
      return g;
    }
    case Family::chisq:
      require_order(family, k, 64);
      g[0] = rising(theta[0], k, 2.0) * rising_log_derivative(theta[0], k, 2.0);
      return g;
    case Family::exponential:
      require_order(family, k, 64);
      g[0] = factorial(k) * k * std::pow(theta[0], k - 1);
      return g;
    case Family::gamma_fixed_shape:
      require_order(family, k, 64);
      g[0] = k * std::pow(theta[0], k - 1) * rising(fixed_at(family, fixed, 0), k);
      return g;
    case Family::binomial_fixed_trials: {
      require_order(family, k, 3);
      const double n = fixed_at(family, fixed, 0);
      const double p = theta[0];
      if (k == 1) {
        g[0] = n;
      } else if (k == 2) {
        g[0] = n - 2.0 * n * p + 2.0 * n * n * p;
      } else {
        g[0] = n * (1.0 - 6.0 * p + 6.0 * n * p + 6.0 * p * p - 9.0 * n * p * p + 3.0 * n * n * p * p);
      }
      return g;
    }
    case Family::gamma2: {
      require_order(family, k, 64);
      const double a = theta[0], b = theta[1];
      const double r = std::pow(b, k) * rising(a, k);
      g[0] = r * rising_log_derivative(a, k);
      g[1] = k * std::pow(b, k - 1) * rising(a, k);
      return g;
    }
    case Family::beta2: {
      require_order(family, k, 64);
      const double a = theta[0], b = theta[1];
      const double r = raw_moment(family, fixed, theta, k);
      g[0] = r * (rising_log_derivative(a, k) - rising_log_derivative(a + b, k));
      g[1] = -r * rising_log_derivative(a + b, k);
      return g;
    }
    case Family::lognormal: {
      const double r = raw_moment(family, fixed, theta, k);
      g[0] = k * r;
      g[1] = 0.5 * k * k * r;
      return g;
    }
    case Family::loglogistic: {
      const double a = theta[0], b = theta[1];
      raw_moment(family, fixed, theta, k);  // validates b > k
      const double x = k * std::numbers::pi / b;
      g[0] = k * std::pow(a, k - 1) * x_over_sin(x);
      g[1] = std::pow(a, k) * x_over_sin_derivative(x) * (-x / b);
      return g;
    }
  }
  throw DomainError("unhandled family");
}

Eigen::VectorXd moments(const ParametricModel& model, const Eigen::VectorXd& theta) {
  model.check_domain(theta);
  const int m = model.moment_order();
  Eigen::VectorXd r(m);
  for (int k = 1; k <= m; ++k) r[k - 1] = raw_moment(model.family(), model.fixed_params(), theta, k);
  return r;
}

Eigen::MatrixXd moment_jacobian(const ParametricModel& model, const Eigen::VectorXd& theta) {
  model.check_domain(theta);
  const int m = model.moment_order();
  Eigen::MatrixXd jac(m, model.theta_dim());
  for (int k = 1; k <= m; ++k) {
    jac.row(k - 1) = raw_moment_gradient(model.family(), model.fixed_params(), theta, k).transpose();
  }
  return jac;
}

std::pair<double, double> first_moment_image(const ParametricModel& model) {
  switch (model.family()) {
    case Family::poisson:
    case Family::chisq:
    case Family::exponential:
    case Family::gamma_fixed_shape:
      return {0.0, kInf};
    case Family::binomial_fixed_trials:
      return {0.0, model.fixed_params()[0]};
    default:
      throw DomainError(model.name() + ": first-moment inverse needs a one-parameter model");
  }
}

double first_moment_inverse(const ParametricModel& model, double r1) {
  const auto [lo, hi] = first_moment_image(model);
  const bool closed = model.family() == Family::binomial_fixed_trials;
  const bool inside = closed ? (r1 >= lo && r1 <= hi) : (r1 > lo && r1 < hi);
  if (!inside) {
    std::ostringstream os;
    os << model.name() << ": r1 = " << r1 << " outside the image of r_1 (" << lo << ", " << hi << ")";
    throw OutOfImage(os.str());
  }
  // r_1 is linear in theta for every one-parameter family shipped.
  switch (model.family()) {
    case Family::gamma_fixed_shape:
    case Family::binomial_fixed_trials:
      return r1 / model.fixed_params()[0];
    default:
      return r1;
  }
}

double model_curve_value(const ParametricModel& model, double r1) {
  Eigen::VectorXd theta(1);
  theta[0] = first_moment_inverse(model, r1);
  return raw_moment(model.family(), model.fixed_params(), theta, 2);
}

double model_curve_slope(const ParametricModel& model, double r1) {
  Eigen::VectorXd theta(1);
  theta[0] = first_moment_inverse(model, r1);
  const auto& fixed = model.fixed_params();
  return raw_moment_gradient(model.family(), fixed, theta, 2)[0] /
         raw_moment_gradient(model.family(), fixed, theta, 1)[0];
}

}  // namespace elicit
