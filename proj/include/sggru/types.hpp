#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sggru {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered list of node or frequency indices (0-based).
using IndexList = std::vector<int>;

/// Thrown when an algorithm fails numerically (non-convergence, training
/// divergence, inadmissible sampling set). Kept distinct from
/// std::invalid_argument so callers can map the two classes to different
/// exit codes.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace sggru
