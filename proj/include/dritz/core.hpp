#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dritz {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.14159265358979323846;

/// Thrown when a run produces a non-finite loss; carries the diagnostic the
/// training loop recorded at the point of failure.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(long iteration, double param_norm)
      : std::runtime_error("non-finite loss at iteration " + std::to_string(iteration) +
                           " (parameter 2-norm " + std::to_string(param_norm) + ")"),
        iteration(iteration),
        param_norm(param_norm) {}

  long iteration;
  double param_norm;
};

inline Mat2 symmetric_part(const Mat2& g) { return 0.5 * (g + g.transpose()); }

}  // namespace dritz
