#include "elicit/theory.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace elicit;
using check::vec;

TEST_SUITE("theory") {
  TEST_CASE("pointwise case rule") {
    CHECK(pointwise_case(1.0, -1.0) == Case2D::c);
    CHECK(pointwise_case(-1.0, 1.0) == Case2D::c);
    CHECK(pointwise_case(1.0, 2.0) == Case2D::a);
    CHECK(pointwise_case(3.0, 2.0) == Case2D::b);
  }

  TEST_CASE("case to best weight mapping") {
    CHECK(predict_best_weight(Case2D::a) == BestKind::infinity);
    CHECK(predict_best_weight(Case2D::b) == BestKind::zero);
    CHECK(predict_best_weight(Case2D::c) == BestKind::interior);
    CHECK(predict_best_weight(Case2D::a, 1) == BestKind::zero);
    CHECK(predict_best_weight(Case2D::b, 1) == BestKind::infinity);
    CHECK(predict_best_weight(Case2D::c, 1) == BestKind::interior);
    CHECK_THROWS_AS(predict_best_weight(Case2D::mixed), MixedCase);
  }

  TEST_CASE("quadratic-curve families are uniformly case b") {
    // R(r1) = r1 + r1^2 (poisson), 2 r1 + r1^2 (chisq), (1 + 1/K) r1^2 (gamma):
    // R' exceeds the variance contour slope 2 r1 everywhere on r1 > 0.
    CHECK(classify_2d_case(ParametricModel::make("poisson"), Link::variance, 0.1, 20.0).which == Case2D::b);
    CHECK(classify_2d_case(ParametricModel::make("chisq"), Link::variance, 0.1, 20.0).which == Case2D::b);
    CHECK(classify_2d_case(ParametricModel::make("exponential"), Link::variance, 0.1, 20.0).which == Case2D::b);
    CHECK(classify_2d_case(ParametricModel::make("gamma_fixed_shape", {3.0}), Link::variance, 0.1, 20.0).which ==
          Case2D::b);
  }

  TEST_CASE("binomial switches case at half the trials") {
    // R(r1) = r1 + r1^2 (1 - 1/n), so R' - 2 r1 = 1 - 2 r1 / n.
    for (double n : {4.0, 10.0, 30.0}) {
      const auto model = ParametricModel::make("binomial_fixed_trials", {n});
      const CaseClassification mixed = classify_2d_case(model, Link::variance, 0.1 * n, 0.9 * n);
      REQUIRE(mixed.which == Case2D::mixed);
      REQUIRE(mixed.boundaries.size() == 1);
      CHECK(mixed.boundaries[0] == doctest::Approx(n / 2.0).epsilon(1e-6));
      CHECK(classify_2d_case(model, Link::variance, 0.1 * n, 0.4 * n).which == Case2D::b);
      CHECK(classify_2d_case(model, Link::variance, 0.6 * n, 0.9 * n).which == Case2D::a);
    }
  }

  TEST_CASE("classification slopes match the closed forms") {
    const auto model = ParametricModel::make("poisson");
    const CaseClassification cls = classify_2d_case(model, Link::variance, 1.0, 5.0, 9);
    REQUIRE(cls.r1.size() == 9);
    for (std::size_t q = 0; q < cls.r1.size(); ++q) {
      CHECK(cls.model_slope[q] == doctest::Approx(1.0 + 2.0 * cls.r1[q]));
      CHECK(cls.contour_slope[q] == doctest::Approx(2.0 * cls.r1[q]));
    }
  }

  TEST_CASE("classification rejects intervals outside the image") {
    CHECK_THROWS_AS(classify_2d_case(ParametricModel::make("binomial_fixed_trials", {10}), Link::variance, 1.0, 12.0),
                    DomainError);
    CHECK_THROWS_AS(classify_2d_case(ParametricModel::make("lognormal"), Link::variance, 1.0, 2.0), DomainError);
  }

  TEST_CASE("condition A containment") {
    const Eigen::VectorXd m = vec({1.0, 2.0});
    const std::vector<Eigen::VectorXd> inside{vec({1.0, 2.0}), vec({1.5, 3.0}), vec({2.0, 2.5})};
    const ContainmentResult ok = check_condition_A(inside, m);
    CHECK(ok.check.verdict == Verdict::pass);
    CHECK(ok.orthant == std::vector<int>{1, 1});
    const std::vector<Eigen::VectorXd> straddle{vec({0.5, 2.0}), vec({1.5, 3.0})};
    const ContainmentResult bad = check_condition_A(straddle, m);
    CHECK(bad.check.verdict == Verdict::fail);
    CHECK(bad.orthant[0] == 0);
  }

  TEST_CASE("condition B ordering") {
    const std::vector<double> r{3.0, 1.0, 2.0}, up{30.0, 10.0, 20.0}, mixed{2.0, 1.0, 3.0};
    CHECK(check_condition_B(r, up).verdict == Verdict::pass);
    CHECK(check_condition_B(r, mixed).verdict == Verdict::fail);
  }

  TEST_CASE("monotone planar curves") {
    const std::vector<Eigen::Vector2d> up{{0, 0}, {1, 2}, {2, 3}};
    const std::vector<Eigen::Vector2d> anti{{0, 3}, {1, 2}, {2, 0}};
    const std::vector<Eigen::Vector2d> turn{{0, 0}, {1, 2}, {2, 1}};
    const std::vector<Eigen::Vector2d> single{{1, 1}};
    CHECK(check_monotone_curve(up) == Verdict::pass);
    CHECK(check_monotone_curve(anti) == Verdict::pass);
    CHECK(check_monotone_curve(turn) == Verdict::fail);
    CHECK(check_monotone_curve(single) == Verdict::not_applicable);
  }

  TEST_CASE("linear trajectory fit") {
    check::for_all(50, 83, [](check::Gen& g, int) {
      const Eigen::Vector3d p0(g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-5, 5));
      const Eigen::Vector3d d = Eigen::Vector3d(g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1)).normalized();
      std::vector<Eigen::Vector3d> pts;
      for (int q = 0; q < 10; ++q) pts.push_back(p0 + g.uniform(-3, 3) * d);
      const LinearFit fit = check_linear_trajectory(pts);
      CHECK(fit.verdict == Verdict::pass);
      CHECK(fit.residual < 1e-9);
      CHECK(std::abs(std::abs(fit.direction.dot(d)) - 1.0) < 1e-9);
    });
    const std::vector<Eigen::Vector3d> corner{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    CHECK(check_linear_trajectory(corner).verdict == Verdict::fail);
    const std::vector<Eigen::Vector3d> three{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK_THROWS_AS(check_linear_trajectory(three), TooFewPoints);
  }

  TEST_CASE("lognormal log map lies on a plane") {
    check::for_all(100, 89, [](check::Gen& g, int) {
      const double u = g.uniform(-3, 3), s = g.uniform(0, 9);
      const LogMap m = lognormal_log_map(u, s);
      CHECK(m.x == doctest::Approx(u + 0.5 * s));
      CHECK(m.y == doctest::Approx(2 * u + 2 * s));
      CHECK(m.z == doctest::Approx(3 * u + 4.5 * s));
      CHECK(m.residual < 1e-9);
    });
  }

  TEST_CASE("lognormal skew approximation tightens with spread") {
    const SkewApprox at9 = lognormal_skew_approx(9.0);
    const double exact = (std::exp(9.0) + 2.0) * std::sqrt(std::expm1(9.0));
    CHECK(at9.exact == doctest::Approx(exact));
    CHECK(at9.approx == doctest::Approx(std::exp(13.5)));
    CHECK(at9.rel_gap < 0.01);
    CHECK(lognormal_skew_approx(1.0).rel_gap > at9.rel_gap);
  }

  TEST_CASE("slice premise on three-moment families") {
    const std::vector<double> values{1.5, 3.0, 6.0};
    const SlicePremise p = check_md_slice_premise(ParametricModel::make("lognormal"), 0, values, 60);
    CHECK(p.slices.size() == 3);
    CHECK(p.verdict != Verdict::fail);
    CHECK_THROWS_AS(check_md_slice_premise(ParametricModel::make("poisson"), 0, values), DomainError);
  }
}
