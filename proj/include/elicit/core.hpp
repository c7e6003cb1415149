#ifndef ELICIT_CORE_HPP
#define ELICIT_CORE_HPP

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace elicit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ELICIT_DEFINE_ERROR(Name) \
  class Name : public Error {     \
   public:                        \
    using Error::Error;           \
  }

ELICIT_DEFINE_ERROR(DomainError);
ELICIT_DEFINE_ERROR(OutOfImage);
ELICIT_DEFINE_ERROR(DegenerateMoments);
ELICIT_DEFINE_ERROR(EmptyContour);
ELICIT_DEFINE_ERROR(VerticalContour);
ELICIT_DEFINE_ERROR(EmptySample);
ELICIT_DEFINE_ERROR(ZeroMomentBase);
ELICIT_DEFINE_ERROR(InvalidWeights);
ELICIT_DEFINE_ERROR(InfiniteWeightInSum);
ELICIT_DEFINE_ERROR(EmptyGrid);
ELICIT_DEFINE_ERROR(TooFewPoints);
ELICIT_DEFINE_ERROR(EndpointMissing);
ELICIT_DEFINE_ERROR(MixedCase);
ELICIT_DEFINE_ERROR(ConfigError);

#undef ELICIT_DEFINE_ERROR

}  // namespace elicit

#endif  // ELICIT_CORE_HPP
