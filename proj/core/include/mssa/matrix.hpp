#pragma once

#include <Eigen/Dense>

// Dense matrices are the universal carrier throughout the library.
// Storage order is fixed project-wide to column-major (Eigen's default);
// the binary file format in io.hpp serializes values in this order.

namespace mssa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace mssa
