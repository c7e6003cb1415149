#ifndef ELICIT_THEORY_HPP
#define ELICIT_THEORY_HPP

#include "elicit/distmodels.hpp"
#include "elicit/links.hpp"
#include "elicit/sweep.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace elicit {

enum class Verdict { pass, fail, not_applicable };

std::string_view verdict_name(Verdict v);

struct CheckResult {
  std::string name;
  std::string anchor;  // which result of the theory this check exercises
  Verdict verdict = Verdict::not_applicable;
  std::string witness;
  std::optional<std::size_t> witness_index;
  double tolerance = 0.0;
};

struct TheoryReport {
  std::vector<CheckResult> checks;

  bool any_failed() const;
};

struct ContainmentResult {
  CheckResult check;
  /// Per coordinate: +1 all points at or above m_hat, -1 at or below, 0 both.
  std::vector<int> orthant;
};

/// Every trajectory point sits weakly on one side of m_hat in each coordinate,
/// with slack 1e-9 (1 + |m_hat_j|).
ContainmentResult check_condition_A(std::span<const Eigen::VectorXd> trajectory, const Eigen::VectorXd& m_hat);
ContainmentResult check_condition_A(const SweepCurve& curve, const Eigen::VectorXd& m_hat);

/// Gamma is monotone (or constant) when the points are ordered by the swept
/// moment r_index, within 1e-3 of the gamma range.
CheckResult check_condition_B(std::span<const double> swept_moment, std::span<const double> gammas);
CheckResult check_condition_B(const SweepCurve& curve, Link link);

enum class Case2D { a, b, c, mixed };

std::string_view case_name(Case2D c);

struct CaseSegment {
  double lo = 0.0;
  double hi = 0.0;
  Case2D which = Case2D::b;
};

struct CaseClassification {
  Case2D which = Case2D::b;
  std::vector<double> r1;
  std::vector<double> model_slope;    // R'(r1)
  std::vector<double> contour_slope;  // T'(r1; t(r1, R(r1)))
  std::vector<CaseSegment> segments;
  std::vector<double> boundaries;  // located case changes, bisected
};

/// Case of a single grid point from R' and T'.
Case2D pointwise_case(double model_slope, double contour_slope);

/// Classifies a one-parameter model against a two-moment link on
/// [r1_lo, r1_hi] sampled at n_grid points. Throws DomainError when the
/// interval leaves the image of r_1 or the model is not one-parameter.
CaseClassification classify_2d_case(const ParametricModel& model, Link link, double r1_lo, double r1_hi,
                                    int n_grid = 200);

/// a -> infinity, b -> zero, c -> interior for a sweep of the first weight.
/// Sweeping the second weight reverses the roles of zero and infinity because
/// only the ratio c_1 / c_2 matters. Throws MixedCase.
BestKind predict_best_weight(Case2D which, int sweep_index = 0);

struct SliceResult {
  double fixed_value = 0.0;
  Verdict verdict = Verdict::not_applicable;
  std::vector<Eigen::Vector2d> curve;  // (r_i, r_j) along the slice
};

struct SlicePremise {
  Verdict verdict = Verdict::not_applicable;
  std::vector<SliceResult> slices;
};

/// Strictly monotone planar curve: both coordinates strictly monotone along
/// the traversal order. Fewer than two distinct points is not applicable.
Verdict check_monotone_curve(std::span<const Eigen::Vector2d> points);

/// Traces {r : r_fixed = value} for each value on a two-parameter model with
/// three moments and tests the remaining pair for strict monotonicity. Slices
/// that are empty or degenerate are reported as not applicable.
SlicePremise check_md_slice_premise(const ParametricModel& model, int fixed_index, std::span<const double> values,
                                    int n_grid = 100);

struct LinearFit {
  double residual = 0.0;  // max orthogonal distance / diameter
  Verdict verdict = Verdict::pass;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::Zero();
};

inline constexpr double kLinearTolerance = 0.05;

/// Total-least-squares line through the points. Throws TooFewPoints under 4.
LinearFit check_linear_trajectory(std::span<const Eigen::Vector3d> points);
LinearFit check_linear_trajectory(const SweepCurve& curve);

struct LogMap {
  double x = 0.0, y = 0.0, z = 0.0;
  double residual = 0.0;  // |3x - 3y + z|
};

/// Log moments of LogN(u, s) with s = v^2.
LogMap lognormal_log_map(double u, double s);

struct SkewApprox {
  double exact = 0.0;
  double approx = 0.0;
  double rel_gap = 0.0;
};

/// Exact lognormal skewness (e^s + 2) sqrt(e^s - 1) against e^{1.5 s}.
SkewApprox lognormal_skew_approx(double s);

/// Checks applicable to a finished sweep: swept sub-loss monotonicity, conditions A and B, and
/// for one-parameter two-moment problems the case prediction against the
/// empirical best weight on the trajectory's r_1 span.
TheoryReport analyze_curve(const SweepCurve& curve);

}  // namespace elicit

#endif  // ELICIT_THEORY_HPP
