#ifndef ELICIT_SWEEP_HPP
#define ELICIT_SWEEP_HPP

#include "elicit/distmodels.hpp"
#include "elicit/links.hpp"
#include "elicit/losses.hpp"
#include "elicit/optimize.hpp"

#include <optional>
#include <span>
#include <vector>

namespace elicit {

// Everything needed to solve one weighted problem except the weights.
struct Experiment {
  ParametricModel model;
  Link link;
  EmpiricalMoments em;
  std::vector<SubLoss> kinds;
  Eigen::VectorXd base;  // k
  OptimizerConfig optimizer;

  /// Throws DomainError when model, link, moments, sub-losses and base disagree in order.
  void validate() const;
  WeightVector weights(Eigen::VectorXd c) const { return WeightVector::with_base(std::move(c), base); }
};

struct SweepSpec {
  int index = 0;                  // zero-based swept coordinate
  Eigen::VectorXd fixed_weights;  // entry at `index` is ignored
  std::vector<double> grid;       // finite, positive, strictly increasing
  bool include_zero = true;
  bool include_infinity = true;
  bool warm_start = true;

  static std::vector<double> log_grid(double lo = 1e-3, double hi = 1e3, int points = 41);
  void validate(int order) const;
};

struct SweepPoint {
  double c = 0.0;
  Solution solution;
  double gamma = 0.0;
  /// Optimizer or link failure message; empty when the point solved.
  std::string error;

  bool usable() const { return error.empty() && solution.converged && std::isfinite(gamma); }
};

struct SweepCurve {
  int index = 0;
  std::vector<SweepPoint> points;  // ordered by c, zero first and +inf last
  double gamma_hat = 0.0;
  double failure_rate = 0.0;
  bool usable = true;
  std::optional<Experiment> experiment;
  std::optional<SweepSpec> spec;

  const SweepPoint* zero_end() const;
  const SweepPoint* infinite_end() const;
};

/// More than this fraction of failed points marks a curve unusable.
inline constexpr double kMaxFailureRate = 0.2;

SweepCurve run_sweep(const Experiment& experiment, const SweepSpec& spec);

enum class Monotonicity { increasing, decreasing, constant, non_monotone };

std::string_view monotonicity_name(Monotonicity m);

struct MonotonicityResult {
  Monotonicity verdict = Monotonicity::constant;
  double max_violation = 0.0;
  double tolerance = 0.0;
};

/// Monotone up to 1e-3 of the range on consecutive differences; constant when
/// the range is below 1e-9 (1 + |mean|). Throws TooFewPoints under 3 values.
MonotonicityResult classify_monotonicity(std::span<const double> values);
MonotonicityResult classify_monotonicity(const SweepCurve& curve);

/// Gamma of usable points in c order.
std::vector<double> usable_gammas(const SweepCurve& curve);

enum class BestKind { zero, infinity, interior };

std::string_view best_kind_name(BestKind k);

struct BestWeight {
  BestKind kind = BestKind::zero;
  double c = 0.0;
  double gamma = 0.0;
  double gap = 0.0;  // |gamma - gamma_hat|
};

/// Endpoint ordering rule on (t at c = 0, t at c = +inf, truth): the truth
/// strictly between the endpoints is interior, otherwise the closer endpoint
/// wins and an exact tie goes to zero.
BestKind order_endpoints(double t_zero, double t_inf, double t_hat);

/// Applies order_endpoints to the curve. Interior cases pick the grid point
/// closest to gamma_hat and, when the curve carries its experiment, refine it
/// by golden-section search in log c. Throws EndpointMissing.
BestWeight best_weight(const SweepCurve& curve);

struct SubLossMonotoneCheck {
  bool pass = true;
  std::optional<std::size_t> witness;  // first point whose sub-loss rose
  double worst_excess = 0.0;
};

/// Swept sub-loss must not increase with c, up to abs_tol + rel_tol |L|.
SubLossMonotoneCheck check_subloss_monotone(const SweepCurve& curve, double abs_tol = 1e-8, double rel_tol = 1e-6);

}  // namespace elicit

#endif  // ELICIT_SWEEP_HPP
