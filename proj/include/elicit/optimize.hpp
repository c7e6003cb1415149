#ifndef ELICIT_OPTIMIZE_HPP
#define ELICIT_OPTIMIZE_HPP

#include "elicit/distmodels.hpp"
#include "elicit/losses.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace elicit {

enum class Method { nelder_mead, gradient_descent };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct InitSpec {
  enum class Kind { moment_match, meshgrid_min, explicit_points };

  Kind kind = Kind::moment_match;
  std::vector<Eigen::VectorXd> points;  // explicit_points only
};

std::string_view init_kind_name(InitSpec::Kind kind);

struct OptimizerConfig {
  Method method = Method::nelder_mead;
  int max_iters = 10000;
  double tol_loss = 1e-12;
  double tol_step = 1e-10;
  /// Additional random interior starts on top of the init point(s).
  int multistart = 4;
  InitSpec init;
  /// Seeds the multistart offsets.
  std::uint64_t seed = 0x5EED;
  /// Cube width used when init = meshgrid_min.
  double meshgrid_width = 0.1;

  void validate() const;
};

struct StartResult {
  Eigen::VectorXd start;
  Eigen::VectorXd theta;
  double loss = 0.0;
  bool converged = false;
  int n_iters = 0;
};

// Minimizer of the weighted loss over the model's parameter domain.
// With an infinite weight, `loss` sums only the finite-weight terms.
struct Solution {
  Eigen::VectorXd theta_star;
  Eigen::VectorXd r_star;
  double loss = 0.0;
  Eigen::VectorXd sub_losses;
  bool converged = false;
  /// The infinite-weight constraint could not be met; nearest image point used.
  bool clamped = false;
  int n_iters = 0;
  Eigen::VectorXd start_used;
  std::vector<StartResult> starts;
};

/// Every start's local result is kept in `starts`; the best by (loss, lex theta)
/// is returned. `extra_starts` (e.g. warm starts) are appended after the
/// configured ones.
Solution minimize(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                  std::span<const SubLoss> kinds, const OptimizerConfig& config,
                  std::span<const Eigen::VectorXd> extra_starts = {});

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// Exhaustive grid search over lo, lo + width, ... <= hi per coordinate.
/// Ties go to the lexicographically smallest theta. Throws EmptyGrid when the
/// width exceeds a non-degenerate box side.
Solution meshgrid_oracle(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                         std::span<const SubLoss> kinds, const Box& box, double width, int threads = 0);

/// Box of +-3 unconstrained units around moment_match_init, mapped back to theta.
Box default_box(const ParametricModel& model, const EmpiricalMoments& em);

/// Interior starting point matching the first moments where possible.
Eigen::VectorXd moment_match_init(const ParametricModel& model, const EmpiricalMoments& em);

/// Loss, sub-losses and moments at a given theta (constants included).
Solution evaluate_at(const ParametricModel& model, const WeightVector& weights, const EmpiricalMoments& em,
                     std::span<const SubLoss> kinds, const Eigen::VectorXd& theta);

/// Coordinate of a two-parameter model held as the free variable when one
/// moment is pinned; the other coordinate moves r_k monotonically.
int level_set_free_coordinate(Family family);

/// Theta on {r_k(theta) = target} whose free coordinate maps from phi_free.
/// `guess` seeds the bracket for the other (unconstrained) coordinate.
/// Empty when the level set does not cross that free value.
std::optional<Eigen::VectorXd> solve_level_set(const ParametricModel& model, int moment_index, double target,
                                               double phi_free, double guess = 0.0);

/// Worker threads: ELICIT_THREADS when set, else hardware concurrency.
int thread_budget();

}  // namespace elicit

#endif  // ELICIT_OPTIMIZE_HPP
