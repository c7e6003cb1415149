#ifndef ELICIT_RNG_HPP
#define ELICIT_RNG_HPP

#include <cstdint>
#include <string_view>

namespace elicit {

// Counter-based generator: the n-th output is splitmix64_mix(key + n * golden).
// No hidden state besides the counter, so a stream is fully described by
// (key, counter) and reproduces bit-for-bit on any platform.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-counter";

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Stream for one sampling template: key = mix(seed ^ fnv1a64(name)).
  static CounterRng substream(std::uint64_t seed, std::string_view name);

  std::uint64_t next();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal (Marsaglia polar method).
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64_mix(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace elicit

#endif  // ELICIT_RNG_HPP
