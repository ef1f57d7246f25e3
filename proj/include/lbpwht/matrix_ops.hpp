#pragma once

#include "lbpwht/types.hpp"

namespace lbpwht {

// Dense product a*b with a fixed accumulation order: every output element is
// the sequential sum over k of a(i,k)*b(k,j), k ascending. This is the one
// multiply primitive every backpropagation path uses; keeping the order pinned
// makes results reproducible down to the last bit.
// Throws ShapeError when a.cols() != b.rows().
Matrix matmul(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

// ||approx - exact||_F / max(||exact||_F, 1e-30).
double relative_frobenius_error(const Eigen::Ref<const Matrix>& approx,
                                const Eigen::Ref<const Matrix>& exact);

}  // namespace lbpwht
