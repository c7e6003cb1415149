#include "elicit/optimize.hpp"

#include "elicit/local_search.hpp"
#include "elicit/rng.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>

namespace elicit {
namespace {

constexpr double kMultistartSpread = 2.0;
constexpr double kConstraintTol = 1e-9;

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

bool better(double fa, const Eigen::VectorXd& a, double fb, const Eigen::VectorXd& b) {
  if (fa != fb) return fa < fb;
  return lex_less(a, b);
}

// Weighted loss without the v_hat constants, which do not depend on theta.
struct WeightedObjective {
  const ParametricModel& model;
  const EmpiricalMoments& em;
  std::span<const SubLoss> kinds;
  Eigen::VectorXd eff;

  double variable(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd r;
    try {
      r = moments(model, theta);
    } catch (const Error&) {
      return kInf;
    }
    double s = 0.0;
    for (int i = 0; i < eff.size(); ++i) {
      if (eff[i] == 0.0) continue;
      const double d = r[i] - em.m_hat[i];
      const SubLoss& k = kinds[i];
      s += eff[i] * (d < 0.0 ? k.below : k.above) * d * d;
    }
    return std::isfinite(s) ? s : kInf;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd r = moments(model, theta);
    const Eigen::MatrixXd jac = moment_jacobian(model, theta);
    Eigen::VectorXd dl = Eigen::VectorXd::Zero(eff.size());
    for (int i = 0; i < eff.size(); ++i) {
      if (eff[i] != 0.0) dl[i] = eff[i] * sub_loss_derivative(kinds[i], i, r[i], em);
    }
    return jac.transpose() * dl;
  }
};

Eigen::VectorXd finite_effective(const WeightVector& w) {
  Eigen::VectorXd eff = w.effective();
  for (int i = 0; i < eff.size(); ++i) {
    if (std::isinf(eff[i])) eff[i] = 0.0;
  }
  return eff;
}

Eigen::VectorXd multistart_offset(std::uint64_t seed, int index, int dim) {
  CounterRng rng(splitmix64_mix(seed + static_cast<std::uint64_t>(index) + 1));
  Eigen::VectorXd off(dim);
  for (int j = 0; j < dim; ++j) off[j] = kMultistartSpread * (2.0 * rng.uniform() - 1.0);
  return off;
}

// Root of g on the unconstrained coordinate of a map; nullopt when g keeps its sign.
std::optional<double> solve_unconstrained(const std::function<double(double)>& g, const CoordinateMap& map,
                                          double guess) {
  double lo = -CoordinateMap::kBound, hi = CoordinateMap::kBound;
  double glo = 0.0, ghi = 0.0;
  if (map.is_identity()) {
    double width = 1.0;
    lo = guess - width;
    hi = guess + width;
    glo = g(lo);
    ghi = g(hi);
    while (!(glo * ghi <= 0.0) && width < 1e6) {
      width *= 2.0;
      lo = guess - width;
      hi = guess + width;
      glo = g(lo);
      ghi = g(hi);
    }
  } else {
    glo = g(lo);
    ghi = g(hi);
  }
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if (!(glo * ghi < 0.0)) return std::nullopt;
  std::uintmax_t iters = 300;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
  return std::abs(g(a)) <= std::abs(g(b)) ? a : b;
}

std::vector<Eigen::VectorXd> configured_starts(const ParametricModel& model, const WeightVector& weights,
                                               const EmpiricalMoments& em, std::span<const SubLoss> kinds,
                                               const OptimizerConfig& config) {
  std::vector<Eigen::VectorXd> starts;
  switch (config.init.kind) {
    case InitSpec::Kind::moment_match:
      starts.push_back(moment_match_init(model, em));
      break;
    case InitSpec::Kind::meshgrid_min:
      if (weights.infinite_index()) {
        starts.push_back(moment_match_init(model, em));
      } else {
        starts.push_back(meshgrid_oracle(model, weights, em, kinds, default_box(model, em), config.meshgrid_width)
                             .theta_star);
      }
      break;
    case InitSpec::Kind::explicit_points:
      for (const auto& p : config.init.points) {
        model.check_domain(p);
        starts.push_back(p);
      }
      break;
  }
  const Eigen::VectorXd base = model.to_unconstrained(starts.front());
  for (int s = 0; s < config.multistart; ++s) {
    const Eigen::VectorXd phi = base + multistart_offset(config.seed, s, model.theta_dim());
    starts.push_back(model.to_constrained(model.clip_unconstrained(phi)));
  }
  return starts;
}

LocalResult local_search(const ObjectiveFn& f, const GradientFn& grad, const Eigen::VectorXd& phi0,
                         const OptimizerConfig& config) {
  if (config.method == Method::gradient_descent && grad) {
    return gradient_descent(f, grad, phi0, {config.max_iters, config.tol_loss, config.tol_step});
  }
  NelderMeadOptions nm;
  nm.max_iters = config.max_iters;
  nm.tol_step = config.tol_step;
  return nelder_mead(f, phi0, nm);
}

Solution pick_best(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                   std::span<const SubLoss> kinds, std::vector<StartResult> results, bool clamped) {
  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s) {
    if (better(results[s].loss, results[s].theta, results[best].loss, results[best].theta)) best = s;
  }
  Solution sol = evaluate_at(model, weights, em, kinds, results[best].theta);
  sol.converged = results[best].converged && !clamped;
  sol.clamped = clamped;
  sol.n_iters = results[best].n_iters;
  sol.start_used = results[best].start;
  // Report totals (with constants) per start.
  const double constant = sol.loss - WeightedObjective{model, em, kinds, finite_effective(weights)}.variable(sol.theta_star);
  for (auto& r : results) r.loss += constant;
  sol.starts = std::move(results);
  return sol;
}

Solution minimize_free(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                       std::span<const SubLoss> kinds, const OptimizerConfig& config,
                       const std::vector<Eigen::VectorXd>& starts) {
  const WeightedObjective obj{model, em, kinds, finite_effective(weights)};
  const ObjectiveFn f = [&](const Eigen::VectorXd& phi) {
    return obj.variable(model.to_constrained(model.clip_unconstrained(phi)));
  };
  const GradientFn grad = [&](const Eigen::VectorXd& phi) -> Eigen::VectorXd {
    const Eigen::VectorXd clipped = model.clip_unconstrained(phi);
    const Eigen::VectorXd theta = model.to_constrained(clipped);
    Eigen::VectorXd g = obj.gradient(theta);
    const Eigen::VectorXd d = model.reparam_derivative(phi);
    return (g.array() * d.array()).matrix();
  };
  std::vector<StartResult> results;
  for (const auto& start : starts) {
    const LocalResult lr = local_search(f, grad, model.to_unconstrained(start), config);
    const Eigen::VectorXd theta = model.to_constrained(model.clip_unconstrained(lr.x));
    results.push_back({start, theta, obj.variable(theta), lr.converged, lr.iters});
  }
  return pick_best(model, weights, em, kinds, std::move(results), false);
}

// One-parameter model with r_i pinned: the constraint alone fixes theta.
Solution minimize_pinned_1d(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                            std::span<const SubLoss> kinds, int pinned) {
  const CoordinateMap map{model.domain()[0]};
  const double target = em.m_hat[pinned];
  auto g = [&](double phi) {
    Eigen::VectorXd th(1);
    th[0] = map.to_constrained(phi);
    return raw_moment(model.family(), model.fixed_params(), th, pinned + 1) - target;
  };
  std::optional<double> root = solve_unconstrained(g, map, 0.0);
  bool clamped = false;
  double phi = 0.0;
  if (root) {
    phi = *root;
  } else {
    clamped = true;
    phi = std::abs(g(-CoordinateMap::kBound)) <= std::abs(g(CoordinateMap::kBound)) ? -CoordinateMap::kBound
                                                                                    : CoordinateMap::kBound;
  }
  Eigen::VectorXd theta(1);
  theta[0] = map.to_constrained(phi);
  const double var = WeightedObjective{model, em, kinds, finite_effective(weights)}.variable(theta);
  std::vector<StartResult> results{{theta, theta, var, true, 0}};
  return pick_best(model, weights, em, kinds, std::move(results), clamped);
}

// Two-parameter model with r_i pinned: eliminate one coordinate through the
// equality and search the remaining one.
Solution minimize_pinned_2d(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                            std::span<const SubLoss> kinds, const OptimizerConfig& config, int pinned,
                            const std::vector<Eigen::VectorXd>& starts) {
  const int fc = level_set_free_coordinate(model.family());
  const int ec = 1 - fc;
  const CoordinateMap fmap{model.domain()[fc]};
  const double target = em.m_hat[pinned];
  const WeightedObjective obj{model, em, kinds, finite_effective(weights)};

  auto complete = [&](double phi_free, double guess) {
    return solve_level_set(model, pinned, target, phi_free, guess);
  };

  std::vector<StartResult> results;
  for (const auto& start : starts) {
    const Eigen::VectorXd phi_start = model.to_unconstrained(start);
    // Nearest feasible free coordinate to the start.
    std::optional<double> feasible;
    for (double delta = 0.0; delta <= 2.0 * CoordinateMap::kBound && !feasible; delta += 0.25) {
      for (double sgn : {1.0, -1.0}) {
        const double cand = fmap.clip(phi_start[fc] + sgn * delta);
        if (complete(cand, phi_start[ec])) {
          feasible = cand;
          break;
        }
      }
    }
    if (!feasible) continue;
    const ObjectiveFn f = [&](const Eigen::VectorXd& x) {
      const auto th = complete(fmap.clip(x[0]), phi_start[ec]);
      return th ? obj.variable(*th) : kInf;
    };
    NelderMeadOptions nm;
    nm.max_iters = config.max_iters;
    nm.tol_step = config.tol_step;
    const LocalResult lr = nelder_mead(f, Eigen::VectorXd::Constant(1, *feasible), nm);
    const auto theta = complete(fmap.clip(lr.x[0]), phi_start[ec]);
    if (!theta) continue;
    results.push_back({start, *theta, obj.variable(*theta), lr.converged, lr.iters});
  }
  if (!results.empty()) return pick_best(model, weights, em, kinds, std::move(results), false);

  // Unreachable target: nearest image point in r_i, flagged.
  const ObjectiveFn residual = [&](const Eigen::VectorXd& phi) {
    const Eigen::VectorXd th = model.to_constrained(model.clip_unconstrained(phi));
    const double r = raw_moment(model.family(), model.fixed_params(), th, pinned + 1);
    return (r - target) * (r - target);
  };
  NelderMeadOptions nm;
  nm.max_iters = config.max_iters;
  nm.tol_step = config.tol_step;
  const LocalResult lr = nelder_mead(residual, model.to_unconstrained(starts.front()), nm);
  const Eigen::VectorXd theta = model.to_constrained(model.clip_unconstrained(lr.x));
  std::vector<StartResult> fallback{{starts.front(), theta, obj.variable(theta), lr.converged, lr.iters}};
  return pick_best(model, weights, em, kinds, std::move(fallback), true);
}

}  // namespace

std::string_view method_name(Method m) { return m == Method::nelder_mead ? "nelder_mead" : "gradient_descent"; }

Method parse_method(std::string_view name) {
  if (name == "nelder_mead") return Method::nelder_mead;
  if (name == "gradient_descent") return Method::gradient_descent;
  throw ConfigError("unknown optimizer method '" + std::string(name) + "'");
}

std::string_view init_kind_name(InitSpec::Kind kind) {
  switch (kind) {
    case InitSpec::Kind::moment_match:
      return "moment_match";
    case InitSpec::Kind::meshgrid_min:
      return "meshgrid_min";
    case InitSpec::Kind::explicit_points:
      return "explicit";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (max_iters < 1) throw ConfigError("optimizer.max_iters must be >= 1");
  if (!(tol_loss > 0.0)) throw ConfigError("optimizer.tol_loss must be > 0");
  if (!(tol_step > 0.0)) throw ConfigError("optimizer.tol_step must be > 0");
  if (multistart < 0) throw ConfigError("optimizer.multistart must be >= 0");
  if (!(meshgrid_width > 0.0)) throw ConfigError("optimizer.meshgrid_width must be > 0");
  if (init.kind == InitSpec::Kind::explicit_points && init.points.empty()) {
    throw ConfigError("optimizer.init explicit needs at least one point");
  }
}

Solution evaluate_at(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                     std::span<const SubLoss> kinds, const Eigen::VectorXd& theta) {
  Solution sol;
  sol.theta_star = theta;
  sol.r_star = moments(model, theta);
  const int m = model.moment_order();
  sol.sub_losses.resize(m);
  for (int i = 0; i < m; ++i) sol.sub_losses[i] = sub_loss(kinds[i], i, sol.r_star[i], em);
  WeightVector finite = weights;
  if (const auto inf = weights.infinite_index()) finite.c[*inf] = 0.0;
  sol.loss = total_loss(finite, sol.r_star, em, kinds);
  sol.start_used = theta;
  sol.converged = true;
  return sol;
}

Solution minimize(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                  std::span<const SubLoss> kinds, const OptimizerConfig& config,
                  std::span<const Eigen::VectorXd> extra_starts) {
  weights.validate();
  config.validate();
  const int m = model.moment_order();
  if (em.order() != m || weights.size() != m || static_cast<int>(kinds.size()) != m) {
    throw DomainError(model.name() + ": weights, moments and sub-losses must have order " + std::to_string(m));
  }
  std::vector<Eigen::VectorXd> starts = configured_starts(model, weights, em, kinds, config);
  for (const auto& s : extra_starts) {
    model.check_domain(s);
    starts.push_back(s);
  }
  if (const auto pinned = weights.infinite_index()) {
    if (model.theta_dim() == 1) return minimize_pinned_1d(model, weights, em, kinds, *pinned);
    return minimize_pinned_2d(model, weights, em, kinds, config, *pinned, starts);
  }
  return minimize_free(model, weights, em, kinds, config, starts);
}

int level_set_free_coordinate(Family family) {
  switch (family) {
    case Family::lognormal:
    case Family::loglogistic:
      return 1;
    default:
      return 0;
  }
}

std::optional<Eigen::VectorXd> solve_level_set(const ParametricModel& model, int moment_index, double target,
                                               double phi_free, double guess) {
  if (model.theta_dim() != 2) throw DomainError("level sets are traced on two-parameter models only");
  const int fc = level_set_free_coordinate(model.family());
  const int ec = 1 - fc;
  const CoordinateMap emap{model.domain()[ec]};
  Eigen::VectorXd theta(2);
  theta[fc] = CoordinateMap{model.domain()[fc]}.to_constrained(phi_free);
  auto g = [&](double phi_e) {
    Eigen::VectorXd th = theta;
    th[ec] = emap.to_constrained(phi_e);
    const double r = raw_moment(model.family(), model.fixed_params(), th, moment_index + 1);
    return std::isfinite(r) ? r - target : (phi_e > 0 ? kInf : -kInf);
  };
  const auto root = solve_unconstrained(g, emap, guess);
  if (!root) return std::nullopt;
  theta[ec] = emap.to_constrained(*root);
  if (!model.in_domain(theta)) return std::nullopt;
  const double r = raw_moment(model.family(), model.fixed_params(), theta, moment_index + 1);
  if (!(std::abs(r - target) <= kConstraintTol * std::max(1.0, std::abs(target)))) return std::nullopt;
  return theta;
}

int thread_budget() {
  if (const char* env = std::getenv("ELICIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Solution meshgrid_oracle(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                         std::span<const SubLoss> kinds, const Box& box, double width, int threads) {
  weights.validate();
  if (weights.infinite_index()) throw InfiniteWeightInSum("meshgrid oracle needs finite weights");
  if (!(width > 0.0)) throw EmptyGrid("grid width must be > 0");
  const int d = model.theta_dim();
  if (box.lo.size() != d || box.hi.size() != d) throw DomainError("box dimension does not match the model");
  std::vector<std::int64_t> counts(d);
  std::int64_t total = 1;
  for (int j = 0; j < d; ++j) {
    const double lo = box.lo[j], hi = box.hi[j];
    if (!(hi >= lo)) throw EmptyGrid("box side " + std::to_string(j) + " is empty");
    if (!model.domain()[j].strictly_inside(lo) || !model.domain()[j].strictly_inside(hi)) {
      throw DomainError("box side " + std::to_string(j) + " is not strictly inside the domain");
    }
    const double span = hi - lo;
    if (span > 0.0 && width > span) {
      throw EmptyGrid("width " + std::to_string(width) + " exceeds box side " + std::to_string(j));
    }
    counts[j] = static_cast<std::int64_t>(std::floor(span / width * (1.0 + 1e-12))) + 1;
    total *= counts[j];
  }

  const WeightedObjective obj{model, em, kinds, finite_effective(weights)};
  auto point = [&](std::int64_t flat) {
    Eigen::VectorXd th(d);
    for (int j = d - 1; j >= 0; --j) {
      th[j] = box.lo[j] + static_cast<double>(flat % counts[j]) * width;
      flat /= counts[j];
    }
    return th;
  };

  // Flat index order is lexicographic in theta, so (loss, index) breaks ties.
  const int nthreads = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads > 0 ? threads : thread_budget(), total)));
  std::vector<std::pair<double, std::int64_t>> best(nthreads, {kInf, -1});
  {
    std::vector<std::jthread> pool;
    const std::int64_t chunk = (total + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        const std::int64_t begin = t * chunk, end = std::min(total, begin + chunk);
        for (std::int64_t idx = begin; idx < end; ++idx) {
          const double v = obj.variable(point(idx));
          if (v < best[t].first) best[t] = {v, idx};
        }
      });
    }
  }
  auto winner = *std::min_element(best.begin(), best.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return static_cast<std::uint64_t>(a.second) < static_cast<std::uint64_t>(b.second);
  });
  if (winner.second < 0) throw EmptyGrid("no grid point has a finite loss");
  Solution sol = evaluate_at(model, weights, em, kinds, point(winner.second));
  sol.n_iters = static_cast<int>(std::min<std::int64_t>(total, std::numeric_limits<int>::max()));
  return sol;
}

Box default_box(const ParametricModel& model, const EmpiricalMoments& em) {
  const Eigen::VectorXd center = model.to_unconstrained(moment_match_init(model, em));
  const Eigen::VectorXd three = Eigen::VectorXd::Constant(center.size(), 3.0);
  Box box{model.to_constrained(model.clip_unconstrained(center - three)),
          model.to_constrained(model.clip_unconstrained(center + three))};
  for (int j = 0; j < box.lo.size(); ++j) {
    if (box.lo[j] > box.hi[j]) std::swap(box.lo[j], box.hi[j]);
  }
  return box;
}

Eigen::VectorXd moment_match_init(const ParametricModel& model, const EmpiricalMoments& em) {
  const auto& dom = model.domain();
  const Eigen::VectorXd center = model.to_constrained(Eigen::VectorXd::Zero(model.theta_dim()));
  const double m1 = em.m_hat[0];
  const double m2 = em.order() > 1 ? em.m_hat[1] : kInf;
  Eigen::VectorXd theta(model.theta_dim());
  switch (model.family()) {
    case Family::poisson:
    case Family::chisq:
    case Family::exponential:
      theta[0] = dom[0].clamp_interior(m1);
      return theta;
    case Family::gamma_fixed_shape:
    case Family::binomial_fixed_trials:
      theta[0] = dom[0].clamp_interior(m1 / model.fixed_params()[0]);
      return theta;
    case Family::lognormal: {
      if (!(m1 > 0.0) || !(m2 > 0.0)) return center;
      theta[0] = 2.0 * std::log(m1) - 0.5 * std::log(m2);
      theta[1] = std::max(std::log(m2) - 2.0 * std::log(m1), 1e-6);
      theta[0] = std::log(m1) - 0.5 * theta[1];
      return theta;
    }
    case Family::gamma2: {
      const double var = m2 - m1 * m1;
      if (!(m1 > 0.0) || !(var > 0.0)) return center;
      theta << m1 * m1 / var, var / m1;
      return theta;
    }
    case Family::beta2: {
      const double var = m2 - m1 * m1;
      if (!(m1 > 0.0 && m1 < 1.0) || !(var > 0.0) || !(var < m1 * (1.0 - m1))) return center;
      const double common = m1 * (1.0 - m1) / var - 1.0;
      theta << m1 * common, (1.0 - m1) * common;
      return theta;
    }
    case Family::loglogistic: {
      if (!(m1 > 0.0) || !(m2 > 0.0)) return center;
      // m2 / m1^2 = g(2 pi / b) / g(pi / b)^2 with g(x) = x / sin x, decreasing in b.
      auto g = [](double x) { return x / std::sin(x); };
      const double ratio = m2 / (m1 * m1);
      auto h = [&](double b) { return g(2.0 * std::numbers::pi / b) / std::pow(g(std::numbers::pi / b), 2) - ratio; };
      const double lo = dom[1].lo + 1e-6, hi = 1e6;
      const double hlo = h(lo), hhi = h(hi);
      if (!(hlo * hhi < 0.0)) return center;
      std::uintmax_t iters = 200;
      const auto [a, b] = boost::math::tools::toms748_solve(h, lo, hi, hlo, hhi,
                                                            boost::math::tools::eps_tolerance<double>(40), iters);
      theta[1] = 0.5 * (a + b);
      theta[0] = m1 / g(std::numbers::pi / theta[1]);
      return theta;
    }
  }
  return center;
}

}  // namespace elicit
