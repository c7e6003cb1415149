#include "elicit/distmodels.hpp"
#include "elicit/links.hpp"
#include "elicit/losses.hpp"
#include "elicit/sampling.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>

using namespace elicit;
using check::vec;

namespace {

struct Named {
  Family family;
  std::vector<double> fixed;
};

const std::vector<Named> kModels{
    {Family::poisson, {}},        {Family::chisq, {}}, {Family::exponential, {}},
    {Family::gamma_fixed_shape, {2.0}}, {Family::binomial_fixed_trials, {10.0}}, {Family::gamma2, {}},
    {Family::beta2, {}},          {Family::lognormal, {}}, {Family::loglogistic, {}},
};

// Mean of x^k over draws, with its standard error.
struct McMoment {
  double mean;
  double se;
};

std::vector<McMoment> monte_carlo(const std::function<double()>& draw, int n, int order) {
  std::vector<double> s1(order, 0.0), s2(order, 0.0);
  for (int q = 0; q < n; ++q) {
    const double x = draw();
    double p = 1.0;
    for (int k = 0; k < order; ++k) {
      p *= x;
      s1[k] += p;
      s2[k] += p * p;
    }
  }
  std::vector<McMoment> out;
  for (int k = 0; k < order; ++k) {
    const double m = s1[k] / n;
    out.push_back({m, std::sqrt(std::max(s2[k] / n - m * m, 0.0) / n)});
  }
  return out;
}

}  // namespace

TEST_SUITE("distmodels") {
  TEST_CASE("moments match worked examples") {
    const auto poisson = ParametricModel::make("poisson");
    const Eigen::VectorXd r = moments(poisson, vec({2.0}));
    CHECK(r[0] == doctest::Approx(2.0));
    CHECK(r[1] == doctest::Approx(6.0));

    const auto logn = ParametricModel::make("lognormal");
    const Eigen::VectorXd flat = moments(logn, vec({0.0, 0.0}));
    CHECK(flat.isApprox(vec({1.0, 1.0, 1.0})));
    const Eigen::VectorXd r01 = moments(logn, vec({0.0, 1.0}));
    CHECK(r01[0] == doctest::Approx(1.648721).epsilon(1e-6));
    CHECK(r01[1] == doctest::Approx(7.389056).epsilon(1e-6));
    CHECK(r01[2] == doctest::Approx(90.017131).epsilon(1e-6));

    const auto binom = ParametricModel::make("binomial_fixed_trials", {10});
    const Eigen::VectorXd rb = moments(binom, vec({0.1}));
    CHECK(rb[0] == doctest::Approx(1.0));
    CHECK(rb[1] == doctest::Approx(1.9));
  }

  TEST_CASE("domain violations name the bound") {
    const auto poisson = ParametricModel::make("poisson");
    CHECK_THROWS_AS(moments(poisson, vec({-1.0})), DomainError);
    try {
      moments(poisson, vec({-1.0}));
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("> 0") != std::string::npos);
    }
    const auto binom = ParametricModel::make("binomial_fixed_trials", {10});
    CHECK_NOTHROW(moments(binom, vec({0.0})));
    CHECK_NOTHROW(moments(binom, vec({1.0})));
    CHECK_THROWS_AS(moments(binom, vec({1.5})), DomainError);
    const auto ll = ParametricModel::make("loglogistic");
    CHECK_THROWS_AS(moments(ll, vec({1.0, 3.5})), DomainError);
    CHECK_NOTHROW(moments(ll, vec({1.0, 3.6})));
  }

  TEST_CASE("model construction validates fixed parameters") {
    CHECK_THROWS_AS(ParametricModel::make("binomial_fixed_trials", {2.5}), DomainError);
    CHECK_THROWS_AS(ParametricModel::make("gamma_fixed_shape", {-1.0}), DomainError);
    CHECK_THROWS_AS(ParametricModel::make("gamma_fixed_shape"), DomainError);
    CHECK_THROWS_AS(ParametricModel::make("weibull"), ConfigError);
    CHECK(ParametricModel::make("lognormal").moment_order() == 3);
    CHECK(ParametricModel::make("chisq").moment_order() == 2);
  }

  TEST_CASE("jacobian worked examples") {
    const Eigen::MatrixXd jp = moment_jacobian(ParametricModel::make("poisson"), vec({2.0}));
    CHECK(jp(0, 0) == doctest::Approx(1.0));
    CHECK(jp(1, 0) == doctest::Approx(5.0));
    const Eigen::MatrixXd je = moment_jacobian(ParametricModel::make("exponential"), vec({1.0}));
    CHECK(je(0, 0) == doctest::Approx(1.0));
    CHECK(je(1, 0) == doctest::Approx(4.0));
    const auto logn = ParametricModel::make("lognormal");
    const Eigen::VectorXd r = moments(logn, vec({0.0, 1.0}));
    const Eigen::MatrixXd jl = moment_jacobian(logn, vec({0.0, 1.0}));
    for (int i = 0; i < 3; ++i) CHECK(jl(i, 0) == doctest::Approx((i + 1) * r[i]));
  }

  TEST_CASE("jacobian matches central differences at 20 interior points per model") {
    for (const auto& nm : kModels) {
      const auto model = ParametricModel::make(nm.family, nm.fixed);
      check::for_all(20, 100 + static_cast<int>(nm.family), [&](check::Gen& g, int) {
        Eigen::VectorXd phi(model.theta_dim());
        for (int j = 0; j < phi.size(); ++j) phi[j] = g.uniform(-2.0, 2.0);
        const Eigen::VectorXd theta = model.to_constrained(phi);
        const Eigen::MatrixXd jac = moment_jacobian(model, theta);
        for (int j = 0; j < model.theta_dim(); ++j) {
          const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
          Eigen::VectorXd up = theta, dn = theta;
          up[j] += h;
          dn[j] -= h;
          const Eigen::VectorXd fd = (moments(model, up) - moments(model, dn)) / (2.0 * h);
          for (int i = 0; i < fd.size(); ++i) {
            INFO(model.name(), " theta=", theta.transpose(), " i=", i, " j=", j);
            CHECK(check::rel_close(jac(i, j), fd[i], 1e-5));
          }
        }
      });
    }
  }

  TEST_CASE("model curve values") {
    CHECK(model_curve_value(ParametricModel::make("poisson"), 3.0) == doctest::Approx(12.0));
    CHECK(model_curve_value(ParametricModel::make("binomial_fixed_trials", {10}), 1.0) == doctest::Approx(1.9));
    CHECK(model_curve_value(ParametricModel::make("chisq"), 4.0) == doctest::Approx(24.0));
    CHECK_THROWS_AS(model_curve_value(ParametricModel::make("binomial_fixed_trials", {10}), 11.0), OutOfImage);
    CHECK_THROWS_AS(model_curve_value(ParametricModel::make("poisson"), -1.0), OutOfImage);
  }

  TEST_CASE("one-parameter moments are strictly monotone") {
    for (const auto& nm : kModels) {
      const auto model = ParametricModel::make(nm.family, nm.fixed);
      if (model.theta_dim() != 1) continue;
      Eigen::VectorXd prev;
      for (int q = 0; q < 100; ++q) {
        const Eigen::VectorXd r = moments(model, model.to_constrained(vec({-5.0 + 10.0 * q / 99.0})));
        if (q > 0) {
          INFO(model.name(), " q=", q);
          CHECK(r[0] > prev[0]);
          CHECK(r[1] > prev[1]);
        }
        prev = r;
      }
    }
  }

  TEST_CASE("variance link recovers each family's variance") {
    auto expected = [](const ParametricModel& m, double t) {
      switch (m.family()) {
        case Family::poisson: return t;
        case Family::chisq: return 2.0 * t;
        case Family::exponential: return t * t;
        case Family::gamma_fixed_shape: return m.fixed_params()[0] * t * t;
        default: return m.fixed_params()[0] * t * (1.0 - t);
      }
    };
    for (const auto& nm : kModels) {
      const auto model = ParametricModel::make(nm.family, nm.fixed);
      if (model.theta_dim() != 1) continue;
      check::for_all(50, 7, [&](check::Gen& g, int) {
        const double t = model.to_constrained(vec({g.uniform(-3.0, 3.0)}))[0];
        const double v = link_value(Link::variance, moments(model, vec({t})));
        INFO(model.name(), " theta=", t);
        CHECK(check::rel_close(v, expected(model, t), 1e-12));
      });
    }
  }

  TEST_CASE("lognormal skewness closed form holds for any location") {
    const auto logn = ParametricModel::make("lognormal");
    check::for_all(200, 9, [&](check::Gen& g, int) {
      const double u = g.uniform(-3.0, 3.0), s = g.uniform(0.25, 9.0);
      const double closed = (std::exp(s) + 2.0) * std::sqrt(std::expm1(s));
      CHECK(check::rel_close(link_value(Link::skewness, moments(logn, vec({u, s}))), closed, 1e-9));
    });
  }

  TEST_CASE("raw moment formulas agree with independent Monte Carlo draws") {
    std::mt19937_64 eng(20240601);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = 1000000;
    struct Case {
      const char* name;
      std::vector<double> fixed;
      Eigen::VectorXd theta;
      std::function<double()> draw;
    };
    std::gamma_distribution<double> g_fixed(2.0, 1.5), g2(2.0, 1.5), ga(2.0, 1.0), gb(5.0, 1.0);
    std::chi_squared_distribution<double> chi(4.0);
    std::exponential_distribution<double> ex(0.5);
    std::poisson_distribution<int> po(3.0);
    std::binomial_distribution<int> bi(10, 0.3);
    std::lognormal_distribution<double> ln(0.2, 0.5);
    const std::vector<Case> cases{
        {"poisson", {}, vec({3.0}), [&] { return double(po(eng)); }},
        {"chisq", {}, vec({4.0}), [&] { return chi(eng); }},
        {"exponential", {}, vec({2.0}), [&] { return ex(eng); }},
        {"gamma_fixed_shape", {2.0}, vec({1.5}), [&] { return g_fixed(eng); }},
        {"binomial_fixed_trials", {10.0}, vec({0.3}), [&] { return double(bi(eng)); }},
        {"gamma2", {}, vec({2.0, 1.5}), [&] { return g2(eng); }},
        {"beta2", {}, vec({2.0, 5.0}), [&] {
           const double a = ga(eng), b = gb(eng);
           return a / (a + b);
         }},
        {"lognormal", {}, vec({0.2, 0.25}), [&] { return ln(eng); }},
        {"loglogistic", {}, vec({1.0, 8.0}), [&] {
           const double u = unif(eng);
           return std::pow(u / (1.0 - u), 1.0 / 8.0);
         }},
    };
    for (const auto& c : cases) {
      const auto model = ParametricModel::make(c.name, c.fixed);
      const Eigen::VectorXd r = moments(model, c.theta);
      const auto mc = monte_carlo(c.draw, n, static_cast<int>(r.size()));
      for (int k = 0; k < r.size(); ++k) {
        INFO(std::string(c.name), " k=", k + 1, " formula=", r[k], " mc=", mc[k].mean, " se=", mc[k].se);
        // 4 sigma keeps the family-wise false alarm rate near 0.2% over ~25 checks.
        CHECK(std::abs(r[k] - mc[k].mean) <= 4.0 * mc[k].se);
      }
    }
  }

  TEST_CASE("sampling edge cases") {
    CHECK(sample({"poisson", {3.0}, 0, 1}).empty());
    const auto zeros = sample({"normal", {0.0, 0.0}, 5, 1});
    REQUIRE(zeros.size() == 5);
    for (double x : zeros) CHECK(x == 0.0);
    CHECK_THROWS_AS(sample({"poisson", {-1.0}, 5, 1}), DomainError);
    CHECK_THROWS_AS(sample({"cauchy", {0.0}, 5, 1}), ConfigError);
  }

  TEST_CASE("poisson sample mean lies within the CLT band") {
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
      const auto xs = sample({"poisson", {3.0}, 100000, seed});
      double m = 0.0;
      for (double x : xs) m += x;
      m /= xs.size();
      CHECK(std::abs(m - 3.0) <= 3.0 * std::sqrt(3.0 / 1e5));
    }
  }

  TEST_CASE("abs_normal draws are non-negative") {
    for (double x : sample({"abs_normal", {0.0, 1.0}, 10000, 3})) CHECK(x >= 0.0);
  }

  TEST_CASE("every template sampler matches its exact moments") {
    const std::vector<std::pair<std::string, std::vector<double>>> templates{
        {"poisson", {3.0}},        {"poisson", {25.0}},        {"chisq", {4.0}},
        {"exponential", {2.0}},    {"gamma_fixed_shape", {0.5, 2.0}}, {"binomial_fixed_trials", {10.0, 0.3}},
        {"gamma2", {2.0, 1.5}},    {"beta2", {2.0, 5.0}},      {"lognormal", {0.2, 0.25}},
        {"loglogistic", {1.0, 8.0}}, {"normal", {1.0, 4.0}},   {"abs_normal", {0.5, 1.0}},
        {"sum_lognormal", {0.0, 0.25, 0.1, 0.09}},
    };
    for (const auto& [name, params] : templates) {
      const auto xs = sample({name, params, 200000, 17});
      const Eigen::VectorXd exact = template_moments(name, params, 2);
      const auto em = empirical_moments(xs, 2);
      for (int k = 0; k < 2; ++k) {
        const double se = std::sqrt(em.v_hat[k] / xs.size());
        INFO(name, " k=", k + 1, " exact=", exact[k], " sample=", em.m_hat[k]);
        CHECK(std::abs(em.m_hat[k] - exact[k]) <= 3.0 * se);
      }
    }
  }

  TEST_CASE("identical templates give identical bytes") {
    for (const char* name : {"poisson", "normal", "gamma2", "sum_lognormal"}) {
      std::vector<double> params = std::string(name) == "sum_lognormal" ? std::vector<double>{0, 1, 0, 4}
                                   : std::string(name) == "gamma2"       ? std::vector<double>{0.7, 2}
                                                                         : std::vector<double>{3, 2};
      if (std::string(name) == "poisson") params = {3};
      const auto a = sample({name, params, 1000, 1234});
      const auto b = sample({name, params, 1000, 1234});
      REQUIRE(a.size() == b.size());
      CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
      const auto c = sample({name, params, 1000, 1235});
      CHECK(std::memcmp(a.data(), c.data(), a.size() * sizeof(double)) != 0);
    }
  }

  TEST_CASE("reparameterization round-trips and stays interior") {
    for (const auto& nm : kModels) {
      const auto model = ParametricModel::make(nm.family, nm.fixed);
      check::for_all(50, 31, [&](check::Gen& g, int) {
        Eigen::VectorXd phi(model.theta_dim());
        for (int j = 0; j < phi.size(); ++j) phi[j] = g.uniform(-40.0, 40.0);
        const Eigen::VectorXd theta = model.to_constrained(model.clip_unconstrained(phi));
        for (int j = 0; j < theta.size(); ++j) CHECK(model.domain()[j].strictly_inside(theta[j]));
        const Eigen::VectorXd back = model.to_unconstrained(theta);
        const Eigen::VectorXd again = model.to_constrained(back);
        CHECK(again.isApprox(theta, 1e-12));
      });
    }
  }
}
