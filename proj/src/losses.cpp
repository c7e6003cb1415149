#include "elicit/losses.hpp"

#include "elicit/sampling.hpp"

#include <cmath>
#include <sstream>

namespace elicit {

EmpiricalMoments empirical_moments(std::span<const double> samples, int order) {
  if (samples.empty()) throw EmptySample("empirical moments need at least one sample");
  if (order < 1) throw DomainError("moment order must be >= 1");
  const auto n = static_cast<double>(samples.size());
  EmpiricalMoments em;
  em.m_hat = Eigen::VectorXd::Zero(order);
  em.v_hat = Eigen::VectorXd::Zero(order);
  em.n = samples.size();
  for (int i = 1; i <= order; ++i) {
    double mean = 0.0;
    for (double x : samples) mean += std::pow(x, i);
    mean /= n;
    // Two-pass variance to avoid cancellation on heavy-tailed data.
    double var = 0.0;
    for (double x : samples) {
      const double d = std::pow(x, i) - mean;
      var += d * d;
    }
    em.m_hat[i - 1] = mean;
    em.v_hat[i - 1] = var / n;
  }
  return em;
}

EmpiricalMoments analytic_moments(const std::string& name, const std::vector<double>& params, int order) {
  EmpiricalMoments em;
  em.m_hat = template_moments(name, params, order);
  em.v_hat = Eigen::VectorXd::Zero(order);
  em.provenance = AnalyticProvenance{name, params};
  return em;
}

EmpiricalMoments explicit_moments(const Eigen::VectorXd& m_hat, std::optional<Eigen::VectorXd> v_hat) {
  EmpiricalMoments em;
  em.m_hat = m_hat;
  em.v_hat = v_hat.value_or(Eigen::VectorXd::Zero(m_hat.size()));
  if (em.v_hat.size() != m_hat.size()) throw DomainError("m_hat and v_hat differ in length");
  if ((em.v_hat.array() < 0.0).any()) throw DomainError("v_hat must be non-negative");
  em.provenance = ExplicitProvenance{};
  return em;
}

SubLoss SubLoss::asymmetric(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("asymmetric_squared needs a, b > 0");
  return SubLoss{Kind::asymmetric_squared, a, b};
}

std::string SubLoss::describe() const {
  if (kind == Kind::squared) return "squared";
  std::ostringstream os;
  os << "asymmetric_squared(" << below << "," << above << ")";
  return os.str();
}

double sub_loss(const SubLoss& loss, int i, double r_i, const EmpiricalMoments& em) {
  const double d = r_i - em.m_hat[i];
  const double w = d < 0.0 ? loss.below : loss.above;
  return w * d * d + em.v_hat[i];
}

double sub_loss_derivative(const SubLoss& loss, int i, double r_i, const EmpiricalMoments& em) {
  const double d = r_i - em.m_hat[i];
  const double w = d < 0.0 ? loss.below : loss.above;
  return 2.0 * w * d;
}

WeightVector WeightVector::with_base(Eigen::VectorXd c, Eigen::VectorXd k) {
  WeightVector w{std::move(c), std::move(k)};
  w.validate();
  return w;
}

WeightVector WeightVector::unit_base(Eigen::VectorXd c) {
  Eigen::VectorXd k = Eigen::VectorXd::Ones(c.size());
  return with_base(std::move(c), std::move(k));
}

void WeightVector::validate() const {
  if (c.size() != k.size() || c.size() < 1) throw InvalidWeights("c and k must have equal, non-zero length");
  int zeros = 0, infinities = 0;
  for (int i = 0; i < c.size(); ++i) {
    if (std::isnan(c[i]) || c[i] < 0.0) throw InvalidWeights("weights must lie in [0, +inf]");
    if (!(k[i] > 0.0) || !std::isfinite(k[i])) throw InvalidWeights("base weights must be finite and > 0");
    zeros += c[i] == 0.0 ? 1 : 0;
    infinities += std::isinf(c[i]) ? 1 : 0;
  }
  if (zeros == c.size()) throw InvalidWeights("all weights are zero");
  if (infinities > 1) throw InvalidWeights("at most one weight may be +inf");
}

Eigen::VectorXd WeightVector::effective() const { return (c.array() / k.array()).matrix(); }

std::optional<int> WeightVector::infinite_index() const {
  for (int i = 0; i < c.size(); ++i) {
    if (std::isinf(c[i])) return i;
  }
  return std::nullopt;
}

double total_loss(const WeightVector& weights, const Eigen::VectorXd& r, const EmpiricalMoments& em,
                  std::span<const SubLoss> kinds) {
  if (weights.infinite_index()) throw InfiniteWeightInSum("an infinite weight cannot enter the weighted sum");
  const Eigen::VectorXd eff = weights.effective();
  if (static_cast<Eigen::Index>(kinds.size()) != eff.size() || r.size() != eff.size() || em.order() != eff.size()) {
    throw DomainError("weights, reports, sub-losses and moments must share one order");
  }
  double total = 0.0;
  for (int i = 0; i < eff.size(); ++i) {
    if (eff[i] == 0.0) continue;
    total += eff[i] * sub_loss(kinds[i], i, r[i], em);
  }
  return total;
}

Eigen::VectorXd renormalize_base(const EmpiricalMoments& em) {
  for (int i = 0; i < em.order(); ++i) {
    if (std::abs(em.m_hat[i]) < 1e-12) {
      throw ZeroMomentBase("m_hat[" + std::to_string(i) + "] is zero; cannot use it as a base weight");
    }
  }
  return em.m_hat.array().square().matrix();
}

}  // namespace elicit
