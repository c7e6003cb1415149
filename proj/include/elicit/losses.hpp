#ifndef ELICIT_LOSSES_HPP
#define ELICIT_LOSSES_HPP

#include "elicit/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace elicit {

struct SampledProvenance {
  std::string name;
  std::vector<double> params;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

struct AnalyticProvenance {
  std::string name;
  std::vector<double> params;
};

/// Moments given directly, e.g. a point deliberately placed off the model curve.
struct ExplicitProvenance {};

using Provenance = std::variant<SampledProvenance, AnalyticProvenance, ExplicitProvenance>;

// Sufficient statistics of the squared sub-losses: per-order sample means of
// X^i (the report target) and sample variances of X^i (an additive constant).
struct EmpiricalMoments {
  Eigen::VectorXd m_hat;
  Eigen::VectorXd v_hat;
  std::size_t n = 0;
  Provenance provenance = ExplicitProvenance{};

  int order() const { return static_cast<int>(m_hat.size()); }
};

/// Population mean and variance of x^i for i = 1..order. Throws EmptySample.
EmpiricalMoments empirical_moments(std::span<const double> samples, int order);

/// Exact moments of a template distribution, v_hat = 0.
EmpiricalMoments analytic_moments(const std::string& name, const std::vector<double>& params, int order);

/// Explicit m_hat with optional v_hat (zero when absent).
EmpiricalMoments explicit_moments(const Eigen::VectorXd& m_hat, std::optional<Eigen::VectorXd> v_hat = {});

struct SubLoss {
  enum class Kind { squared, asymmetric_squared };

  Kind kind = Kind::squared;
  double below = 1.0;  // weight when r_i < m_hat_i
  double above = 1.0;  // weight when r_i >= m_hat_i

  static SubLoss squared() { return {}; }
  static SubLoss asymmetric(double a, double b);

  std::string describe() const;
};

/// L_i(r_i) = w (r_i - m_hat_i)^2 + v_hat_i, with w the side weight.
double sub_loss(const SubLoss& loss, int i, double r_i, const EmpiricalMoments& em);

/// d L_i / d r_i.
double sub_loss_derivative(const SubLoss& loss, int i, double r_i, const EmpiricalMoments& em);

// c in [0, +inf]^M and base weights k > 0; the loss uses c ./ k.
struct WeightVector {
  Eigen::VectorXd c;
  Eigen::VectorXd k;

  static WeightVector with_base(Eigen::VectorXd c, Eigen::VectorXd k);
  static WeightVector unit_base(Eigen::VectorXd c);

  /// Throws InvalidWeights: sizes, negatives, NaN, all-zero, or two infinities.
  void validate() const;
  Eigen::VectorXd effective() const;
  std::optional<int> infinite_index() const;
  int size() const { return static_cast<int>(c.size()); }
};

/// sum_i c_i/k_i L_i(r_i); zero weights contribute exactly zero.
double total_loss(const WeightVector& weights, const Eigen::VectorXd& r, const EmpiricalMoments& em,
                  std::span<const SubLoss> kinds);

/// k_i = m_hat_i^2. Throws ZeroMomentBase when some |m_hat_i| < 1e-12.
Eigen::VectorXd renormalize_base(const EmpiricalMoments& em);

}  // namespace elicit

#endif  // ELICIT_LOSSES_HPP
