#include "elicit/links.hpp"
#include "elicit/optimize.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace elicit;
using check::vec;

namespace {

const std::vector<SubLoss> kTwo(2), kThree(3);

// Weighted Poisson loss c1 (t - m1)^2 + c2 (t + t^2 - m2)^2, minimized by a
// dense scan followed by Newton steps on the derivative.
double poisson_reference(double c1, double c2, double m1, double m2) {
  auto g = [&](double t) { return c1 * (t - m1) * (t - m1) + c2 * std::pow(t + t * t - m2, 2); };
  double best = 1e-6, best_val = g(best);
  for (int q = 1; q <= 200000; ++q) {
    const double t = 1e-6 + 50.0 * q / 200000.0;
    if (g(t) < best_val) best_val = g(t), best = t;
  }
  for (int it = 0; it < 50; ++it) {
    const double u = best + best * best - m2;
    const double du = 1.0 + 2.0 * best;
    const double grad = 2.0 * c1 * (best - m1) + 2.0 * c2 * u * du;
    const double hess = 2.0 * c1 + 2.0 * c2 * (du * du + 2.0 * u);
    if (!(hess > 0.0)) break;
    best -= grad / hess;
  }
  return best;
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("config validation") {
    OptimizerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.init.kind = InitSpec::Kind::explicit_points;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(parse_method("nelder_mead") == Method::nelder_mead);
    CHECK(parse_method("gradient_descent") == Method::gradient_descent);
    CHECK_THROWS_AS(parse_method("bfgs"), ConfigError);
  }

  TEST_CASE("poisson weighted problem matches an independent scan") {
    const auto model = ParametricModel::make("poisson");
    check::for_all(25, 61, [&](check::Gen& g, int) {
      const double m1 = g.uniform(1.0, 8.0);
      const double m2 = m1 + m1 * m1 + g.uniform(-0.5 * m1, 3.0 * m1);
      const double c1 = g.log_uniform(1e-3, 1e3);
      const EmpiricalMoments em = explicit_moments(vec({m1, m2}));
      const Solution sol = minimize(model, WeightVector::unit_base(vec({c1, 1.0})), em, kTwo, OptimizerConfig{});
      const double ref = poisson_reference(c1, 1.0, m1, m2);
      INFO("m=", m1, ",", m2, " c1=", c1);
      CHECK(sol.converged);
      CHECK(check::rel_close(sol.theta_star[0], ref, 1e-6, 1e-8));
    });
  }

  TEST_CASE("zero and infinite weights pin the other moment") {
    const auto model = ParametricModel::make("poisson");
    const EmpiricalMoments em = explicit_moments(vec({3.0, 15.0}));
    const Solution zero = minimize(model, WeightVector::unit_base(vec({0.0, 1.0})), em, kTwo, OptimizerConfig{});
    CHECK(zero.theta_star[0] == doctest::Approx((-1.0 + std::sqrt(61.0)) / 2.0).epsilon(1e-8));
    const Solution inf = minimize(model, WeightVector::unit_base(vec({kInf, 1.0})), em, kTwo, OptimizerConfig{});
    CHECK(inf.theta_star[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK_FALSE(inf.clamped);
    // Only the finite term is reported.
    CHECK(inf.loss == doctest::Approx(9.0));
  }

  TEST_CASE("unreachable infinite-weight target is clamped") {
    const auto model = ParametricModel::make("binomial_fixed_trials", {10});
    const EmpiricalMoments em = explicit_moments(vec({20.0, 401.0}));
    const Solution sol = minimize(model, WeightVector::unit_base(vec({kInf, 1.0})), em, kTwo, OptimizerConfig{});
    CHECK(sol.clamped);
    CHECK(sol.theta_star[0] == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("two-parameter infinite weight hits the pinned moment") {
    const auto model = ParametricModel::make("lognormal");
    const EmpiricalMoments em = explicit_moments(vec({2.0, 9.0, 60.0}));
    const std::vector<SubLoss> kinds(3);
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd c = Eigen::VectorXd::Ones(3);
      c[i] = kInf;
      const Solution sol = minimize(model, WeightVector::unit_base(c), em, kinds, OptimizerConfig{});
      INFO("pinned ", i);
      CHECK_FALSE(sol.clamped);
      CHECK(sol.r_star[i] == doctest::Approx(em.m_hat[i]).epsilon(1e-8));
    }
  }

  TEST_CASE("level-set solutions lie on the level set") {
    for (const char* name : {"gamma2", "beta2", "lognormal", "loglogistic"}) {
      const auto model = ParametricModel::make(name);
      check::for_all(20, 67, [&](check::Gen& g, int) {
        Eigen::VectorXd phi(2);
        phi << g.uniform(-1.5, 1.5), g.uniform(-1.5, 1.5);
        const Eigen::VectorXd theta = model.to_constrained(phi);
        const Eigen::VectorXd r = moments(model, theta);
        const int k = g.integer(0, 1);
        const int free = level_set_free_coordinate(model.family());
        const auto hit = solve_level_set(model, k, r[k], phi[free]);
        INFO(name, " theta=", theta.transpose(), " k=", k);
        REQUIRE(hit.has_value());
        CHECK(check::rel_close(moments(model, *hit)[k], r[k], 1e-8));
      });
    }
  }

  TEST_CASE("optimizer never loses to the meshgrid oracle") {
    const auto model = ParametricModel::make("gamma2");
    const EmpiricalMoments em = explicit_moments(vec({3.0, 13.0, 70.0}));
    const WeightVector w = WeightVector::unit_base(vec({1.0, 0.5, 0.01}));
    const Box box = default_box(model, em);
    const Solution grid = meshgrid_oracle(model, w, em, kThree, box, 0.05);
    const Solution opt = minimize(model, w, em, kThree, OptimizerConfig{});
    CHECK(opt.loss <= grid.loss + 1e-9 * (1.0 + std::abs(grid.loss)));
  }

  TEST_CASE("meshgrid counts, ties and empty grids") {
    const auto model = ParametricModel::make("poisson");
    const EmpiricalMoments em = explicit_moments(vec({2.0, 6.0}));
    const WeightVector w = WeightVector::unit_base(vec({1.0, 1.0}));
    const Box box{vec({1.0}), vec({3.0})};
    const Solution sol = meshgrid_oracle(model, w, em, kTwo, box, 0.5);
    CHECK(sol.n_iters == 5);
    CHECK(sol.theta_star[0] == doctest::Approx(2.0));
    // Width exactly equal to the span keeps both ends.
    CHECK(meshgrid_oracle(model, w, em, kTwo, box, 2.0).n_iters == 2);
    CHECK_THROWS_AS(meshgrid_oracle(model, w, em, kTwo, box, 2.5), EmptyGrid);
    CHECK_THROWS_AS(meshgrid_oracle(model, w, em, kTwo, box, 0.0), EmptyGrid);
    // Symmetric loss around 2 on {1.5, 2.5}: the smaller theta wins.
    const EmpiricalMoments lin = explicit_moments(vec({2.0, 0.0}));
    const WeightVector first = WeightVector::unit_base(vec({1.0, 0.0}));
    CHECK(meshgrid_oracle(model, first, lin, kTwo, Box{vec({1.5}), vec({2.5})}, 1.0).theta_star[0] == 1.5);
  }

  TEST_CASE("meshgrid result does not depend on the thread count") {
    const auto model = ParametricModel::make("lognormal");
    const EmpiricalMoments em = explicit_moments(vec({2.0, 9.0, 60.0}));
    const WeightVector w = WeightVector::unit_base(vec({1.0, 1.0, 1.0}));
    const Box box = default_box(model, em);
    const Solution one = meshgrid_oracle(model, w, em, kThree, box, 0.1, 1);
    const Solution many = meshgrid_oracle(model, w, em, kThree, box, 0.1, 8);
    CHECK(one.theta_star == many.theta_star);
    CHECK(one.loss == many.loss);
  }

  TEST_CASE("fixed seed reproduces every start") {
    const auto model = ParametricModel::make("loglogistic");
    const EmpiricalMoments em = explicit_moments(vec({1.2, 1.7, 2.8}));
    const WeightVector w = WeightVector::unit_base(vec({1.0, 1.0, 0.1}));
    OptimizerConfig cfg;
    cfg.seed = 99;
    const Solution a = minimize(model, w, em, kThree, cfg);
    const Solution b = minimize(model, w, em, kThree, cfg);
    REQUIRE(a.starts.size() == b.starts.size());
    CHECK(a.starts.size() == 1 + static_cast<std::size_t>(cfg.multistart));
    for (std::size_t s = 0; s < a.starts.size(); ++s) CHECK(a.starts[s].theta == b.starts[s].theta);
    CHECK(a.theta_star == b.theta_star);
  }

  TEST_CASE("returned loss is the minimum over starts") {
    const auto model = ParametricModel::make("gamma2");
    const EmpiricalMoments em = explicit_moments(vec({2.0, 7.0, 30.0}), vec({1.0, 2.0, 3.0}));
    const Solution sol = minimize(model, WeightVector::unit_base(vec({1.0, 1.0, 1.0})), em, kThree, OptimizerConfig{});
    for (const auto& s : sol.starts) CHECK(sol.loss <= s.loss);
  }

  TEST_CASE("evaluate_at agrees with total_loss") {
    const auto model = ParametricModel::make("gamma_fixed_shape", {2.0});
    const EmpiricalMoments em = explicit_moments(vec({3.0, 12.0}), vec({0.5, 0.5}));
    const WeightVector w = WeightVector::unit_base(vec({2.0, 0.5}));
    const Solution s = evaluate_at(model, w, em, kTwo, vec({1.7}));
    CHECK(s.loss == doctest::Approx(total_loss(w, moments(model, vec({1.7})), em, kTwo)));
    CHECK(s.sub_losses.size() == 2);
  }

  TEST_CASE("gradient descent agrees with nelder-mead on a convex slice") {
    const auto model = ParametricModel::make("poisson");
    const EmpiricalMoments em = explicit_moments(vec({3.0, 15.0}));
    OptimizerConfig gd;
    gd.method = Method::gradient_descent;
    const WeightVector w = WeightVector::unit_base(vec({1.0, 1.0}));
    const Solution a = minimize(model, w, em, kTwo, gd);
    const Solution b = minimize(model, w, em, kTwo, OptimizerConfig{});
    CHECK(a.theta_star[0] == doctest::Approx(b.theta_star[0]).epsilon(1e-6));
  }

  TEST_CASE("moment-match init is interior") {
    for (const char* name : {"poisson", "binomial_fixed_trials", "gamma2", "beta2", "lognormal", "loglogistic"}) {
      const std::vector<double> fixed = std::string(name) == "binomial_fixed_trials" ? std::vector<double>{10} : std::vector<double>{};
      const auto model = ParametricModel::make(name, fixed);
      const EmpiricalMoments em = explicit_moments(vec({0.4, 0.3, 0.25}).head(model.moment_order()));
      const Eigen::VectorXd t = moment_match_init(model, em);
      for (int j = 0; j < t.size(); ++j) CHECK(model.domain()[j].strictly_inside(t[j]));
    }
  }
}
