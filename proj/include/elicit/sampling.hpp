#ifndef ELICIT_SAMPLING_HPP
#define ELICIT_SAMPLING_HPP

#include "elicit/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace elicit {

// A data-generating template. `name` is a model family name or one of
// normal, abs_normal, sum_lognormal. Parameters by name:
//   poisson [theta]; chisq [dof]; exponential [mean];
//   gamma_fixed_shape [K, scale]; binomial_fixed_trials [K, p];
//   gamma2 [shape, scale]; beta2 [a, b]; lognormal [u, v^2];
//   loglogistic [scale a, shape b]; normal [mean, variance];
//   abs_normal [mean, variance]; sum_lognormal [u_1, v_1^2, u_2, v_2^2, ...]
struct SamplingTemplate {
  std::string name;
  std::vector<double> params;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
};

/// Throws DomainError (bad parameters) or ConfigError (unknown name).
void validate_template(const std::string& name, const std::vector<double>& params);

/// Deterministic draws: the same template always yields the same bytes.
std::vector<double> sample(const SamplingTemplate& tpl);

/// Exact raw moments E[X^k], k = 1..order, of a template distribution.
Eigen::VectorXd template_moments(const std::string& name, const std::vector<double>& params, int order);

}  // namespace elicit

#endif  // ELICIT_SAMPLING_HPP
