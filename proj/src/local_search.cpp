#include "elicit/local_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace elicit {
namespace {

double safe_eval(const ObjectiveFn& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

struct SimplexRun {
  Eigen::VectorXd x;
  double f;
  int iters;
  bool converged;
};

SimplexRun run_simplex(const ObjectiveFn& f, const Eigen::VectorXd& x0, double step, int budget, double tol_step) {
  const auto n = x0.size();
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (Eigen::Index j = 0; j < n; ++j) pts[j + 1][j] += step;
  for (Eigen::Index j = 0; j <= n; ++j) fv[j] = safe_eval(f, pts[j]);

  std::vector<std::size_t> order(n + 1);
  int it = 0;
  for (; it < budget; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    {
      std::vector<Eigen::VectorXd> p2(n + 1);
      std::vector<double> f2(n + 1);
      for (Eigen::Index j = 0; j <= n; ++j) {
        p2[j] = pts[order[j]];
        f2[j] = fv[order[j]];
      }
      pts.swap(p2);
      fv.swap(f2);
    }

    double size = 0.0;
    for (Eigen::Index j = 1; j <= n; ++j) size = std::max(size, (pts[j] - pts[0]).lpNorm<Eigen::Infinity>());
    if (size <= tol_step) return {pts[0], fv[0], it, true};

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) centroid += pts[j];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd& worst = pts[n];
    const Eigen::VectorXd xr = centroid + (centroid - worst);
    const double fr = safe_eval(f, xr);

    if (fr < fv[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (xr - centroid);
      const double fe = safe_eval(f, xe);
      if (fe < fr) {
        pts[n] = xe;
        fv[n] = fe;
      } else {
        pts[n] = xr;
        fv[n] = fr;
      }
      continue;
    }
    if (fr < fv[n - 1]) {
      pts[n] = xr;
      fv[n] = fr;
      continue;
    }
    if (fr < fv[n]) {
      const Eigen::VectorXd xc = centroid + 0.5 * (xr - centroid);
      const double fc = safe_eval(f, xc);
      if (fc <= fr) {
        pts[n] = xc;
        fv[n] = fc;
        continue;
      }
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (worst - centroid);
      const double fc = safe_eval(f, xc);
      if (fc < fv[n]) {
        pts[n] = xc;
        fv[n] = fc;
        continue;
      }
    }
    // shrink toward the best vertex
    for (Eigen::Index j = 1; j <= n; ++j) {
      pts[j] = pts[0] + 0.5 * (pts[j] - pts[0]);
      fv[j] = safe_eval(f, pts[j]);
    }
  }
  const auto best = std::min_element(fv.begin(), fv.end()) - fv.begin();
  return {pts[best], fv[best], it, false};
}

}  // namespace

LocalResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
  LocalResult out;
  out.x = x0;
  out.f = safe_eval(f, x0);
  int budget = opts.max_iters;
  for (int attempt = 0; attempt <= opts.restarts && budget > 0; ++attempt) {
    const SimplexRun run = run_simplex(f, out.x, opts.initial_step, budget, opts.tol_step);
    budget -= run.iters;
    out.iters += run.iters;
    const bool improved = run.f < out.f;
    if (run.f <= out.f) {
      out.x = run.x;
      out.f = run.f;
    }
    out.converged = run.converged;
    if (!run.converged) break;
    // A restart that cannot improve on the incumbent confirms convergence.
    if (attempt > 0 && !improved) break;
  }
  return out;
}

LocalResult gradient_descent(const ObjectiveFn& f, const GradientFn& grad, const Eigen::VectorXd& x0,
                             const GradientDescentOptions& opts) {
  LocalResult out;
  out.x = x0;
  out.f = safe_eval(f, x0);
  if (!std::isfinite(out.f)) return out;
  double t = -1.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    out.iters = it + 1;
    const Eigen::VectorXd g = grad(out.x);
    const double gnorm2 = g.squaredNorm();
    if (!std::isfinite(gnorm2)) return out;
    if (gnorm2 == 0.0) {
      out.converged = true;
      return out;
    }
    if (t < 0.0) t = 1.0 / std::max(1.0, std::sqrt(gnorm2));
    bool accepted = false;
    Eigen::VectorXd xn;
    double fn = 0.0;
    while (t * std::sqrt(gnorm2) > 1e-3 * opts.tol_step) {
      xn = out.x - t * g;
      fn = safe_eval(f, xn);
      if (fn <= out.f - 1e-4 * t * gnorm2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No descent left at the resolution of tol_step.
      out.converged = true;
      return out;
    }
    const double step = (xn - out.x).lpNorm<Eigen::Infinity>();
    const double change = std::abs(out.f - fn);
    const double scale = std::max(std::abs(out.f), std::numeric_limits<double>::min());
    out.x = xn;
    out.f = fn;
    t *= 2.0;
    if (change <= opts.tol_loss * scale || step <= opts.tol_step) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace elicit
