#include "elicit/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace elicit {
namespace {

SweepPoint solve_point(const Experiment& ex, const SweepSpec& spec, double c,
                       std::span<const Eigen::VectorXd> warm) {
  SweepPoint pt;
  pt.c = c;
  try {
    Eigen::VectorXd weights = spec.fixed_weights;
    weights[spec.index] = c;
    pt.solution = minimize(ex.model, ex.weights(weights), ex.em, ex.kinds, ex.optimizer, warm);
    pt.gamma = link_value(ex.link, pt.solution.r_star);
  } catch (const Error& e) {
    pt.error = e.what();
    pt.gamma = std::numeric_limits<double>::quiet_NaN();
  }
  return pt;
}

}  // namespace

void Experiment::validate() const {
  const int m = model.moment_order();
  if (link_order(link) != m) {
    throw DomainError("model " + model.name() + " has " + std::to_string(m) + " moments but link " +
                      std::string(link_name(link)) + " needs " + std::to_string(link_order(link)));
  }
  if (em.order() != m) throw DomainError("empirical moments have the wrong order");
  if (static_cast<int>(kinds.size()) != m) throw DomainError("one sub-loss per moment is required");
  if (base.size() != m) throw DomainError("base weights have the wrong length");
  optimizer.validate();
}

std::vector<double> SweepSpec::log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw DomainError("log grid needs 0 < lo < hi and >= 2 points");
  std::vector<double> g(points);
  const double a = std::log10(lo), b = std::log10(hi);
  for (int j = 0; j < points; ++j) g[j] = std::pow(10.0, a + (b - a) * j / (points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

void SweepSpec::validate(int order) const {
  if (index < 0 || index >= order) throw DomainError("sweep index out of range");
  if (fixed_weights.size() != order) throw DomainError("fixed weights must have one entry per moment");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!(grid[j] > 0.0) || !std::isfinite(grid[j])) throw DomainError("grid values must be finite and > 0");
    if (j > 0 && !(grid[j] > grid[j - 1])) throw DomainError("grid must be strictly increasing");
  }
}

const SweepPoint* SweepCurve::zero_end() const {
  if (points.empty() || points.front().c != 0.0) return nullptr;
  return &points.front();
}

const SweepPoint* SweepCurve::infinite_end() const {
  if (points.empty() || !std::isinf(points.back().c)) return nullptr;
  return &points.back();
}

SweepCurve run_sweep(const Experiment& experiment, const SweepSpec& spec) {
  experiment.validate();
  spec.validate(experiment.model.moment_order());

  std::vector<double> cs;
  if (spec.include_zero) cs.push_back(0.0);
  cs.insert(cs.end(), spec.grid.begin(), spec.grid.end());
  if (spec.include_infinity) cs.push_back(kInf);

  SweepCurve curve;
  curve.index = spec.index;
  curve.gamma_hat = link_value(experiment.link, experiment.em.m_hat);
  curve.points.resize(cs.size());

  if (spec.warm_start) {
    std::vector<Eigen::VectorXd> warm;
    for (std::size_t j = 0; j < cs.size(); ++j) {
      curve.points[j] = solve_point(experiment, spec, cs[j], warm);
      warm.clear();
      if (curve.points[j].error.empty()) warm.push_back(curve.points[j].solution.theta_star);
    }
  } else {
    const std::size_t nthreads = std::min<std::size_t>(cs.size(), static_cast<std::size_t>(thread_budget()));
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t j = t; j < cs.size(); j += nthreads) curve.points[j] = solve_point(experiment, spec, cs[j], {});
      });
    }
  }

  const auto failed = std::count_if(curve.points.begin(), curve.points.end(), [](const SweepPoint& p) { return !p.usable(); });
  curve.failure_rate = curve.points.empty() ? 0.0 : static_cast<double>(failed) / static_cast<double>(curve.points.size());
  curve.usable = curve.failure_rate <= kMaxFailureRate;
  curve.experiment = experiment;
  curve.spec = spec;
  return curve;
}

std::string_view monotonicity_name(Monotonicity m) {
  switch (m) {
    case Monotonicity::increasing:
      return "increasing";
    case Monotonicity::decreasing:
      return "decreasing";
    case Monotonicity::constant:
      return "constant";
    case Monotonicity::non_monotone:
      return "non_monotone";
  }
  return "unknown";
}

MonotonicityResult classify_monotonicity(std::span<const double> values) {
  if (values.size() < 3) throw TooFewPoints("monotonicity needs at least 3 usable points");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  MonotonicityResult out;
  out.tolerance = 1e-3 * range;
  if (range < 1e-9 * (1.0 + std::abs(mean))) {
    out.verdict = Monotonicity::constant;
    return out;
  }
  double worst_drop = 0.0, worst_rise = 0.0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    const double d = values[j] - values[j - 1];
    worst_drop = std::max(worst_drop, -d);
    worst_rise = std::max(worst_rise, d);
  }
  const bool inc = worst_drop <= out.tolerance;
  const bool dec = worst_rise <= out.tolerance;
  if (inc && (!dec || values.back() >= values.front())) {
    out.verdict = Monotonicity::increasing;
    out.max_violation = worst_drop;
  } else if (dec) {
    out.verdict = Monotonicity::decreasing;
    out.max_violation = worst_rise;
  } else {
    out.verdict = Monotonicity::non_monotone;
    out.max_violation = std::min(worst_drop, worst_rise);
  }
  return out;
}

std::vector<double> usable_gammas(const SweepCurve& curve) {
  std::vector<double> g;
  for (const auto& p : curve.points) {
    if (p.usable()) g.push_back(p.gamma);
  }
  return g;
}

MonotonicityResult classify_monotonicity(const SweepCurve& curve) {
  const auto g = usable_gammas(curve);
  return classify_monotonicity(std::span<const double>(g));
}

std::string_view best_kind_name(BestKind k) {
  switch (k) {
    case BestKind::zero:
      return "zero";
    case BestKind::infinity:
      return "infinity";
    case BestKind::interior:
      return "interior";
  }
  return "unknown";
}

BestKind order_endpoints(double t_zero, double t_inf, double t_hat) {
  if ((t_zero < t_hat && t_hat < t_inf) || (t_inf < t_hat && t_hat < t_zero)) return BestKind::interior;
  return std::abs(t_inf - t_hat) < std::abs(t_zero - t_hat) ? BestKind::infinity : BestKind::zero;
}

BestWeight best_weight(const SweepCurve& curve) {
  const SweepPoint* z = curve.zero_end();
  const SweepPoint* inf = curve.infinite_end();
  if (!z || !inf || !z->usable() || !inf->usable()) {
    throw EndpointMissing("best weight needs usable c = 0 and c = +inf endpoints");
  }
  const double hat = curve.gamma_hat;
  BestWeight out;
  out.kind = order_endpoints(z->gamma, inf->gamma, hat);
  if (out.kind != BestKind::interior) {
    const SweepPoint* p = out.kind == BestKind::zero ? z : inf;
    out.c = p->c;
    out.gamma = p->gamma;
    out.gap = std::abs(p->gamma - hat);
    return out;
  }

  // Closest finite positive grid point.
  std::vector<std::size_t> finite;
  for (std::size_t j = 0; j < curve.points.size(); ++j) {
    const auto& p = curve.points[j];
    if (p.usable() && p.c > 0.0 && std::isfinite(p.c)) finite.push_back(j);
  }
  const SweepPoint* best = std::abs(z->gamma - hat) <= std::abs(inf->gamma - hat) ? z : inf;
  std::size_t pos = finite.size();
  for (std::size_t q = 0; q < finite.size(); ++q) {
    const auto& p = curve.points[finite[q]];
    if (std::abs(p.gamma - hat) < std::abs(best->gamma - hat)) {
      best = &p;
      pos = q;
    }
  }
  out.c = best->c;
  out.gamma = best->gamma;
  out.gap = std::abs(best->gamma - hat);
  if (pos == finite.size() || !curve.experiment || !curve.spec) return out;

  const Experiment& ex = *curve.experiment;
  const SweepSpec& spec = *curve.spec;
  const std::vector<Eigen::VectorXd> warm{best->solution.theta_star};
  auto gap_at = [&](double logc, double& gamma) {
    const SweepPoint p = solve_point(ex, spec, std::exp(logc), warm);
    gamma = p.gamma;
    return p.usable() ? std::abs(p.gamma - hat) : kInf;
  };
  double a = std::log(curve.points[finite[pos > 0 ? pos - 1 : pos]].c);
  double b = std::log(curve.points[finite[pos + 1 < finite.size() ? pos + 1 : pos]].c);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double g1 = 0.0, g2 = 0.0;
  double f1 = gap_at(x1, g1), f2 = gap_at(x2, g2);
  for (int it = 0; it < 60 && b - a > 1e-8; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      g2 = g1;
      x1 = b - invphi * (b - a);
      f1 = gap_at(x1, g1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      g1 = g2;
      x2 = a + invphi * (b - a);
      f2 = gap_at(x2, g2);
    }
  }
  const bool first = f1 <= f2;
  const double f = first ? f1 : f2;
  if (f < out.gap) {
    out.c = std::exp(first ? x1 : x2);
    out.gamma = first ? g1 : g2;
    out.gap = f;
  }
  return out;
}

SubLossMonotoneCheck check_subloss_monotone(const SweepCurve& curve, double abs_tol, double rel_tol) {
  SubLossMonotoneCheck out;
  const SweepPoint* prev = nullptr;
  for (std::size_t j = 0; j < curve.points.size(); ++j) {
    const auto& p = curve.points[j];
    if (!p.usable()) continue;
    if (prev) {
      const double before = prev->solution.sub_losses[curve.index];
      const double after = p.solution.sub_losses[curve.index];
      const double excess = after - before - (abs_tol + rel_tol * std::abs(before));
      if (excess > 0.0) {
        if (out.pass) out.witness = j;
        out.pass = false;
        out.worst_excess = std::max(out.worst_excess, excess);
      }
    }
    prev = &p;
  }
  return out;
}

}  // namespace elicit
