#include "elicit/links.hpp"

namespace elicit {

std::string_view link_name(Link link) { return link == Link::variance ? "variance" : "skewness"; }

Link parse_link(std::string_view name) {
  if (name == "variance") return Link::variance;
  if (name == "skewness") return Link::skewness;
  throw ConfigError("unknown link '" + std::string(name) + "'");
}

int link_order(Link link) { return link == Link::variance ? 2 : 3; }

double contour_value(Link link, double r1, double t0) {
  if (link_order(link) != 2) throw DomainError("contour functions need a two-moment link");
  // Every level of r2 - r1^2 is a parabola defined for all r1.
  return t0 + r1 * r1;
}

double contour_slope(Link link, const Eigen::Ref<const Eigen::VectorXd>& r) {
  if (link_order(link) != 2) throw DomainError("contour functions need a two-moment link");
  const Eigen::VectorXd g = link_gradient(link, r);
  if (std::abs(g[1]) < 1e-14) throw VerticalContour("dt/dr2 vanishes; contour is vertical");
  return -g[0] / g[1];
}

}  // namespace elicit
