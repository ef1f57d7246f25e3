#pragma once

#include <Eigen/Dense>

namespace lbpwht {

// All feature maps, weights and gradients are dense row-major doubles.
// Token maps are stored tokens-by-channels (L rows, C columns) so every
// projection acts along the row dimension.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using Index = Eigen::Index;

}  // namespace lbpwht
