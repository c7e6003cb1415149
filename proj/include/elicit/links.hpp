#ifndef ELICIT_LINKS_HPP
#define ELICIT_LINKS_HPP

#include "elicit/core.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <string_view>

namespace elicit {

enum class Link { variance, skewness };

std::string_view link_name(Link link);
Link parse_link(std::string_view name);
int link_order(Link link);

inline constexpr double kDegenerateVariance = 1e-12;

namespace detail {

template <typename Derived>
void check_link_input(Link link, const Eigen::MatrixBase<Derived>& r) {
  if (r.size() != link_order(link)) {
    throw DegenerateMoments(std::string(link_name(link)) + " link expects " + std::to_string(link_order(link)) +
                            " moments, got " + std::to_string(r.size()));
  }
}

template <typename Scalar>
void check_spread(Scalar spread, double eps_var) {
  if (!(spread > Scalar(eps_var))) {
    throw DegenerateMoments("skewness link needs r2 - r1^2 > " + std::to_string(eps_var));
  }
}

}  // namespace detail

/// Target property t(r). Variance: r2 - r1^2. Skewness:
/// (r3 - 3 r1 (r2 - r1^2) - r1^3) / (r2 - r1^2)^(3/2), which needs a strictly
/// positive spread r2 - r1^2 > eps_var.
template <typename Derived>
typename Derived::Scalar link_value(Link link, const Eigen::MatrixBase<Derived>& r,
                                    double eps_var = kDegenerateVariance) {
  using Scalar = typename Derived::Scalar;
  using std::pow;
  detail::check_link_input(link, r);
  const Scalar spread = r(1) - r(0) * r(0);
  if (link == Link::variance) return spread;
  detail::check_spread(spread, eps_var);
  const Scalar numer = r(2) - Scalar(3) * r(0) * spread - r(0) * r(0) * r(0);
  return numer / pow(spread, Scalar(1.5));
}

template <typename Derived>
Vector<typename Derived::Scalar> link_gradient(Link link, const Eigen::MatrixBase<Derived>& r,
                                               double eps_var = kDegenerateVariance) {
  using Scalar = typename Derived::Scalar;
  using std::pow;
  detail::check_link_input(link, r);
  const Scalar r1 = r(0);
  const Scalar spread = r(1) - r1 * r1;
  Vector<Scalar> g(r.size());
  if (link == Link::variance) {
    g << Scalar(-2) * r1, Scalar(1);
    return g;
  }
  detail::check_spread(spread, eps_var);
  const Scalar numer = r(2) - Scalar(3) * r1 * r(1) + Scalar(2) * r1 * r1 * r1;
  const Scalar inv15 = Scalar(1) / pow(spread, Scalar(1.5));
  const Scalar inv25 = inv15 / spread;
  // t = N V^{-3/2}: dt = dN V^{-3/2} - 1.5 N V^{-5/2} dV
  g(0) = (Scalar(-3) * r(1) + Scalar(6) * r1 * r1) * inv15 - Scalar(1.5) * numer * inv25 * (Scalar(-2) * r1);
  g(1) = Scalar(-3) * r1 * inv15 - Scalar(1.5) * numer * inv25;
  g(2) = inv15;
  return g;
}

/// Solves t(r1, r2) = t0 for r2 inside [lo, hi] by bracketed root-finding.
/// Throws EmptyContour if t - t0 does not change sign on the bracket.
template <typename LinkFn>
double solve_contour(LinkFn&& t, double r1, double t0, double lo, double hi, double ftol = 1e-10) {
  auto f = [&](double r2) { return t(r1, r2) - t0; };
  const double flo = f(lo), fhi = f(hi);
  if (std::abs(flo) <= ftol) return lo;
  if (std::abs(fhi) <= ftol) return hi;
  if (!(flo * fhi < 0.0)) {
    throw EmptyContour("contour at level " + std::to_string(t0) + " does not cross r1 = " + std::to_string(r1));
  }
  std::uintmax_t iters = 200;
  auto tol = [&](double a, double b) { return std::abs(f(0.5 * (a + b))) <= ftol || std::abs(b - a) <= 4e-16 * std::abs(a); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  const double mid = 0.5 * (a + b);
  return std::abs(f(a)) < std::abs(f(mid)) ? a : (std::abs(f(b)) < std::abs(f(mid)) ? b : mid);
}

/// Level curve r2 = T(r1; t0). Two-moment links only.
double contour_value(Link link, double r1, double t0);

/// T'(r1; t0) through r: -(dt/dr1) / (dt/dr2). Throws VerticalContour.
double contour_slope(Link link, const Eigen::Ref<const Eigen::VectorXd>& r);

}  // namespace elicit

#endif  // ELICIT_LINKS_HPP
