#include "elicit/theory.hpp"

#include "elicit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace elicit {
namespace {

std::vector<Eigen::VectorXd> usable_reports(const SweepCurve& curve) {
  std::vector<Eigen::VectorXd> rs;
  for (const auto& p : curve.points) {
    if (p.usable()) rs.push_back(p.solution.r_star);
  }
  return rs;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

struct CaseProbe {
  double model_slope;
  double contour_slope;
  Case2D which;
};

CaseProbe probe(const ParametricModel& model, Link link, double r1) {
  Eigen::VectorXd r(2);
  r << r1, model_curve_value(model, r1);
  const double rp = model_curve_slope(model, r1);
  const double tp = contour_slope(link, r);
  return {rp, tp, pointwise_case(rp, tp)};
}

}  // namespace

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::not_applicable:
      return "not_applicable";
  }
  return "unknown";
}

bool TheoryReport::any_failed() const {
  return std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.verdict == Verdict::fail; });
}

ContainmentResult check_condition_A(std::span<const Eigen::VectorXd> trajectory, const Eigen::VectorXd& m_hat) {
  ContainmentResult out;
  out.check.name = "condition_A";
  out.check.anchor = "one-sided trajectory / orthant containment";
  out.check.tolerance = 1e-9;
  if (trajectory.size() < 2) return out;
  const auto m = m_hat.size();
  out.orthant.assign(m, 0);
  out.check.verdict = Verdict::pass;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double slack = 1e-9 * (1.0 + std::abs(m_hat[j]));
    bool above = false, below = false;
    for (std::size_t q = 0; q < trajectory.size(); ++q) {
      const double d = trajectory[q][j] - m_hat[j];
      above = above || d > slack;
      below = below || d < -slack;
      if (above && below && out.check.verdict == Verdict::pass) {
        out.check.verdict = Verdict::fail;
        out.check.witness_index = q;
        out.check.witness = "r_" + std::to_string(j + 1) + " crosses m_hat at point " + std::to_string(q);
      }
    }
    out.orthant[j] = above && !below ? 1 : (below && !above ? -1 : 0);
  }
  if (out.check.verdict == Verdict::pass) {
    std::ostringstream os;
    os << "orthant";
    for (Eigen::Index j = 0; j < m; ++j) {
      os << " r_" << j + 1 << (out.orthant[j] > 0 ? ">=" : (out.orthant[j] < 0 ? "<=" : "=")) << "m_hat";
    }
    out.check.witness = os.str();
  }
  return out;
}

ContainmentResult check_condition_A(const SweepCurve& curve, const Eigen::VectorXd& m_hat) {
  const auto rs = usable_reports(curve);
  return check_condition_A(std::span<const Eigen::VectorXd>(rs), m_hat);
}

CheckResult check_condition_B(std::span<const double> swept_moment, std::span<const double> gammas) {
  CheckResult out;
  out.name = "condition_B";
  out.anchor = "target monotone along the trajectory";
  if (swept_moment.size() != gammas.size()) throw DomainError("condition B needs one gamma per point");
  if (gammas.size() < 2) return out;
  std::vector<std::size_t> order(gammas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return swept_moment[a] < swept_moment[b]; });
  std::vector<double> sorted;
  for (auto q : order) sorted.push_back(gammas[q]);
  if (sorted.size() < 3) {
    out.verdict = Verdict::pass;
    return out;
  }
  const auto mono = classify_monotonicity(std::span<const double>(sorted));
  out.tolerance = mono.tolerance;
  out.verdict = mono.verdict == Monotonicity::non_monotone ? Verdict::fail : Verdict::pass;
  out.witness = std::string(monotonicity_name(mono.verdict)) + " in r_i, max violation " + std::to_string(mono.max_violation);
  return out;
}

CheckResult check_condition_B(const SweepCurve& curve, Link) {
  std::vector<double> ri, g;
  for (const auto& p : curve.points) {
    if (!p.usable()) continue;
    ri.push_back(p.solution.r_star[curve.index]);
    g.push_back(p.gamma);
  }
  return check_condition_B(std::span<const double>(ri), std::span<const double>(g));
}

std::string_view case_name(Case2D c) {
  switch (c) {
    case Case2D::a:
      return "a";
    case Case2D::b:
      return "b";
    case Case2D::c:
      return "c";
    case Case2D::mixed:
      return "mixed";
  }
  return "unknown";
}

Case2D pointwise_case(double model_slope, double contour_slope) {
  if (sign_of(model_slope) * sign_of(contour_slope) < 0) return Case2D::c;
  return model_slope < contour_slope ? Case2D::a : Case2D::b;
}

CaseClassification classify_2d_case(const ParametricModel& model, Link link, double r1_lo, double r1_hi,
                                    int n_grid) {
  if (model.theta_dim() != 1) throw DomainError("case classification needs a one-parameter model");
  if (link_order(link) != 2) throw DomainError("case classification needs a two-moment link");
  if (!(r1_lo <= r1_hi)) throw DomainError("interval must satisfy lo <= hi");
  const auto [img_lo, img_hi] = first_moment_image(model);
  if (r1_lo < img_lo || r1_hi > img_hi) {
    throw DomainError("interval [" + std::to_string(r1_lo) + ", " + std::to_string(r1_hi) +
                      "] leaves the image of r_1 for " + model.name());
  }
  const int n = r1_lo == r1_hi ? 1 : std::max(2, n_grid);
  CaseClassification out;
  std::vector<Case2D> cases;
  for (int q = 0; q < n; ++q) {
    const double r1 = n == 1 ? r1_lo : r1_lo + (r1_hi - r1_lo) * q / (n - 1);
    const CaseProbe p = probe(model, link, r1);
    out.r1.push_back(r1);
    out.model_slope.push_back(p.model_slope);
    out.contour_slope.push_back(p.contour_slope);
    cases.push_back(p.which);
  }
  out.segments.push_back({out.r1[0], out.r1[0], cases[0]});
  for (int q = 1; q < n; ++q) {
    if (cases[q] == cases[q - 1]) {
      out.segments.back().hi = out.r1[q];
      continue;
    }
    double a = out.r1[q - 1], b = out.r1[q];
    for (int it = 0; it < 100 && b - a > 1e-12 * (1.0 + std::abs(a)); ++it) {
      const double mid = 0.5 * (a + b);
      (probe(model, link, mid).which == cases[q - 1] ? a : b) = mid;
    }
    const double boundary = 0.5 * (a + b);
    out.boundaries.push_back(boundary);
    out.segments.back().hi = boundary;
    out.segments.push_back({boundary, out.r1[q], cases[q]});
  }
  out.which = out.segments.size() == 1 ? cases[0] : Case2D::mixed;
  return out;
}

BestKind predict_best_weight(Case2D which, int sweep_index) {
  BestKind k;
  switch (which) {
    case Case2D::a:
      k = BestKind::infinity;
      break;
    case Case2D::b:
      k = BestKind::zero;
      break;
    case Case2D::c:
      return BestKind::interior;
    default:
      throw MixedCase("no single prediction for a mixed case");
  }
  if (sweep_index == 1) k = k == BestKind::zero ? BestKind::infinity : BestKind::zero;
  return k;
}

Verdict check_monotone_curve(std::span<const Eigen::Vector2d> points) {
  std::vector<Eigen::Vector2d> pts;
  for (const auto& p : points) {
    if (pts.empty() || p != pts.back()) pts.push_back(p);
  }
  if (pts.size() < 2) return Verdict::not_applicable;
  const Eigen::Vector2d first = pts[1] - pts[0];
  const int sx = sign_of(first.x()), sy = sign_of(first.y());
  if (sx == 0 || sy == 0) return Verdict::fail;
  for (std::size_t q = 1; q < pts.size(); ++q) {
    const Eigen::Vector2d d = pts[q] - pts[q - 1];
    if (sign_of(d.x()) != sx || sign_of(d.y()) != sy) return Verdict::fail;
  }
  return Verdict::pass;
}

SlicePremise check_md_slice_premise(const ParametricModel& model, int fixed_index, std::span<const double> values,
                                    int n_grid) {
  if (model.theta_dim() != 2 || model.moment_order() != 3) {
    throw DomainError("slice premise needs a two-parameter model with three moments");
  }
  if (fixed_index < 0 || fixed_index > 2) throw DomainError("fixed moment index out of range");
  if (n_grid < 2) throw DomainError("slice grid needs at least 2 points");
  int axes[2];
  for (int j = 0, q = 0; j < 3; ++j) {
    if (j != fixed_index) axes[q++] = j;
  }
  const int fc = level_set_free_coordinate(model.family());
  const int ec = 1 - fc;
  constexpr double kLo = -4.0, kHi = 3.0;

  SlicePremise out;
  bool any_pass = false, any_fail = false;
  for (double value : values) {
    SliceResult slice;
    slice.fixed_value = value;
    double guess = 0.0;
    for (int q = 0; q < n_grid; ++q) {
      const double phi = kLo + (kHi - kLo) * q / (n_grid - 1);
      const auto theta = solve_level_set(model, fixed_index, value, phi, guess);
      if (!theta) continue;
      guess = model.to_unconstrained(*theta)[ec];
      const Eigen::VectorXd r = moments(model, *theta);
      if (!r.allFinite()) continue;
      slice.curve.emplace_back(r[axes[0]], r[axes[1]]);
    }
    slice.verdict = check_monotone_curve(slice.curve);
    any_pass = any_pass || slice.verdict == Verdict::pass;
    any_fail = any_fail || slice.verdict == Verdict::fail;
    out.slices.push_back(std::move(slice));
  }
  out.verdict = any_fail ? Verdict::fail : (any_pass ? Verdict::pass : Verdict::not_applicable);
  return out;
}

LinearFit check_linear_trajectory(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 4) throw TooFewPoints("linear fit needs at least 4 points");
  LinearFit fit;
  for (const auto& p : points) fit.centroid += p;
  fit.centroid /= static_cast<double>(points.size());
  Eigen::MatrixXd centered(points.size(), 3);
  for (std::size_t q = 0; q < points.size(); ++q) centered.row(q) = (points[q] - fit.centroid).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  fit.direction = svd.matrixV().col(0);
  double worst = 0.0, diameter = 0.0;
  for (std::size_t q = 0; q < points.size(); ++q) {
    const Eigen::Vector3d d = points[q] - fit.centroid;
    worst = std::max(worst, (d - d.dot(fit.direction) * fit.direction).norm());
    for (std::size_t s = q + 1; s < points.size(); ++s) diameter = std::max(diameter, (points[q] - points[s]).norm());
  }
  fit.residual = diameter > 0.0 ? worst / diameter : 0.0;
  fit.verdict = fit.residual < kLinearTolerance ? Verdict::pass : Verdict::fail;
  return fit;
}

LinearFit check_linear_trajectory(const SweepCurve& curve) {
  std::vector<Eigen::Vector3d> pts;
  for (const auto& r : usable_reports(curve)) {
    if (r.size() != 3) throw DomainError("linear trajectory check needs three moments");
    pts.emplace_back(r[0], r[1], r[2]);
  }
  return check_linear_trajectory(std::span<const Eigen::Vector3d>(pts));
}

LogMap lognormal_log_map(double u, double s) {
  if (!(s >= 0.0)) throw DomainError("log map needs v^2 >= 0");
  LogMap m;
  m.x = u + 0.5 * s;
  m.y = 2.0 * u + 2.0 * s;
  m.z = 3.0 * u + 4.5 * s;
  m.residual = std::abs(3.0 * m.x - 3.0 * m.y + m.z);
  return m;
}

SkewApprox lognormal_skew_approx(double s) {
  if (!(s > 0.0)) throw DomainError("skew approximation needs v^2 > 0");
  SkewApprox out;
  const double es = std::exp(s);
  out.exact = (es + 2.0) * std::sqrt(std::expm1(s));
  out.approx = std::exp(1.5 * s);
  out.rel_gap = std::abs(out.exact - out.approx) / out.exact;
  return out;
}

TheoryReport analyze_curve(const SweepCurve& curve) {
  TheoryReport report;
  if (!curve.experiment) throw DomainError("curve carries no experiment");
  const Experiment& ex = *curve.experiment;

  const SubLossMonotoneCheck mono = check_subloss_monotone(curve);
  CheckResult lc{"subloss_monotone", "swept sub-loss non-increasing in its weight",
                 mono.pass ? Verdict::pass : Verdict::fail, "", mono.witness, 1e-8};
  if (!mono.pass) lc.witness = "sub-loss rises by " + std::to_string(mono.worst_excess) + " beyond tolerance";
  report.checks.push_back(lc);
  report.checks.push_back(check_condition_A(curve, ex.em.m_hat).check);
  report.checks.push_back(check_condition_B(curve, ex.link));

  CheckResult pred{"case_prediction", "2-D case (a)/(b)/(c) predicts the best weight", Verdict::not_applicable, "", {}, 0.0};
  if (ex.model.theta_dim() == 1 && link_order(ex.link) == 2) {
    const auto rs = usable_reports(curve);
    if (!rs.empty()) {
      double lo = rs.front()[0], hi = lo;
      for (const auto& r : rs) {
        lo = std::min(lo, r[0]);
        hi = std::max(hi, r[0]);
      }
      try {
        const CaseClassification cls = classify_2d_case(ex.model, ex.link, lo, hi);
        std::ostringstream os;
        os << "case " << case_name(cls.which) << " on [" << lo << ", " << hi << "]";
        const auto g = usable_gammas(curve);
        const bool flat = g.size() >= 3 && classify_monotonicity(std::span<const double>(g)).verdict == Monotonicity::constant;
        if (cls.which == Case2D::a || cls.which == Case2D::b) {
          if (flat) {
            os << "; curve is constant, every weight is optimal";
          } else {
            const BestKind predicted = predict_best_weight(cls.which, curve.index);
            const BestKind observed = best_weight(curve).kind;
            os << "; predicted " << best_kind_name(predicted) << ", observed " << best_kind_name(observed);
            pred.verdict = predicted == observed ? Verdict::pass : Verdict::fail;
          }
        }
        pred.witness = os.str();
      } catch (const Error& e) {
        pred.witness = e.what();
      }
    }
  }
  report.checks.push_back(pred);
  return report;
}

}  // namespace elicit
