#ifndef ELICIT_DISTMODELS_HPP
#define ELICIT_DISTMODELS_HPP

#include "elicit/core.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elicit {

enum class Family {
  poisson,
  chisq,
  exponential,
  gamma_fixed_shape,
  binomial_fixed_trials,
  gamma2,
  beta2,
  lognormal,
  loglogistic,
};

std::string_view family_name(Family f);

/// Throws ConfigError for unknown names.
Family parse_family(std::string_view name);

bool is_model_family(std::string_view name);

/// One coordinate of a parameter domain. Infinite ends are always open.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const;
  bool strictly_inside(double x) const { return x > lo && x < hi; }
  /// Moves x off a closed end (or outside points back) by a small margin.
  double clamp_interior(double x) const;
};

// Smooth bijection between an interval and the real line, used by the
// optimizer to keep iterates inside the domain. Two finite ends use a
// scaled logistic, one finite end an exponential offset, none the identity.
struct CoordinateMap {
  Interval domain;

  /// Unconstrained coordinates are clipped to [-kBound, kBound] on any map
  /// that is not the identity, which keeps images strictly interior.
  static constexpr double kBound = 30.0;

  double to_unconstrained(double theta) const;
  double to_constrained(double phi) const;
  double derivative(double phi) const;
  bool is_identity() const;
  double clip(double phi) const;
};

class ParametricModel {
 public:
  static ParametricModel make(Family family, std::vector<double> fixed_params = {});
  static ParametricModel make(std::string_view name, std::vector<double> fixed_params = {});

  Family family() const { return family_; }
  std::string name() const { return std::string(family_name(family_)); }
  const std::vector<double>& fixed_params() const { return fixed_; }
  int theta_dim() const { return static_cast<int>(domain_.size()); }
  int moment_order() const { return theta_dim() + 1; }
  const std::vector<Interval>& domain() const { return domain_; }

  bool in_domain(const Eigen::VectorXd& theta) const;

  /// Throws DomainError naming the first violated bound.
  void check_domain(const Eigen::VectorXd& theta) const;

  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd to_constrained(const Eigen::VectorXd& phi) const;
  /// d theta_j / d phi_j, the reparameterization is coordinate-wise.
  Eigen::VectorXd reparam_derivative(const Eigen::VectorXd& phi) const;
  Eigen::VectorXd clip_unconstrained(const Eigen::VectorXd& phi) const;

 private:
  ParametricModel(Family f, std::vector<double> fixed, std::vector<Interval> dom)
      : family_(f), fixed_(std::move(fixed)), domain_(std::move(dom)) {}

  Family family_;
  std::vector<double> fixed_;
  std::vector<Interval> domain_;
};

/// E[X^k] of a family at theta, k >= 1. Poisson and binomial stop at k = 3.
double raw_moment(Family family, std::span<const double> fixed, const Eigen::VectorXd& theta, int k);

/// Gradient of E[X^k] with respect to theta.
Eigen::VectorXd raw_moment_gradient(Family family, std::span<const double> fixed,
                                    const Eigen::VectorXd& theta, int k);

/// (r_1(theta), ..., r_M(theta)) in closed form.
Eigen::VectorXd moments(const ParametricModel& model, const Eigen::VectorXd& theta);

/// M x d matrix of d r_i / d theta_j.
Eigen::MatrixXd moment_jacobian(const ParametricModel& model, const Eigen::VectorXd& theta);

/// Theta of a one-parameter model with r_1(theta) = r1. Throws OutOfImage.
double first_moment_inverse(const ParametricModel& model, double r1);

/// Closure of the image of r_1 over the domain, as [lo, hi].
std::pair<double, double> first_moment_image(const ParametricModel& model);

/// R(r1) = r_2(r_1^{-1}(r1)) for one-parameter models.
double model_curve_value(const ParametricModel& model, double r1);

/// R'(r1) = (d r_2 / d theta) / (d r_1 / d theta).
double model_curve_slope(const ParametricModel& model, double r1);

}  // namespace elicit

#endif  // ELICIT_DISTMODELS_HPP
