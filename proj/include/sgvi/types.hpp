#pragma once

#include <Eigen/Core>

namespace sgvi {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Read-only vector argument; binds to vectors, contiguous rows and segments
// without copying.
using VecRef = Eigen::Ref<const Vector>;

/// Function value together with its gradient.
struct ValueGrad {
    double value = 0.0;
    Vector grad;
};

}  // namespace sgvi
