#ifndef ELICIT_LOCAL_SEARCH_HPP
#define ELICIT_LOCAL_SEARCH_HPP

#include <Eigen/Dense>

#include <functional>

namespace elicit {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LocalResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iters = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  double initial_step = 0.5;
  int max_iters = 10000;
  /// Converged once every vertex is within tol_step (max-norm) of the best.
  double tol_step = 1e-10;
  /// Fresh simplices started from the best point after convergence.
  int restarts = 2;
};

/// Unconstrained Nelder-Mead with standard coefficients (1, 2, 1/2, 1/2).
/// NaN objective values are treated as +inf.
LocalResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts);

struct GradientDescentOptions {
  int max_iters = 10000;
  double tol_loss = 1e-12;  // relative change in f between accepted steps
  double tol_step = 1e-10;  // max-norm of an accepted step
};

/// Steepest descent with Armijo backtracking.
LocalResult gradient_descent(const ObjectiveFn& f, const GradientFn& grad, const Eigen::VectorXd& x0,
                             const GradientDescentOptions& opts);

}  // namespace elicit

#endif  // ELICIT_LOCAL_SEARCH_HPP
