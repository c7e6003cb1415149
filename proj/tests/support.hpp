#ifndef ELICIT_TESTS_SUPPORT_HPP
#define ELICIT_TESTS_SUPPORT_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace check {

// Input generator for property tests. Seeded std engine, kept separate from
// the library's own generator so test inputs never depend on the code under test.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

template <typename Body>
void for_all(int cases, std::uint64_t seed, Body&& body) {
  Gen g(seed);
  for (int k = 0; k < cases; ++k) body(g, k);
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index j = 0;
  for (double x : xs) v[j++] = x;
  return v;
}

}  // namespace check

#endif  // ELICIT_TESTS_SUPPORT_HPP
