#include "lbpwht/matrix_ops.hpp"

#include <cstdio>

#include "lbpwht/errors.hpp"

namespace lbpwht {

Matrix matmul(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  if (a.cols() != b.rows()) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "matmul: lhs %ldx%ld incompatible with rhs %ldx%ld",
                  static_cast<long>(a.rows()), static_cast<long>(a.cols()),
                  static_cast<long>(b.rows()), static_cast<long>(b.cols()));
    throw ShapeError(msg);
  }
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  const Index m = a.rows(), k = a.cols(), n = b.cols();
  // i-k-j order streams rows of b and out; per element the k-sum stays
  // sequential and ascending, so the result is bitwise independent of the
  // loop nesting used by a plain i-j-k reference.
  for (Index i = 0; i < m; ++i) {
    double* out_row = out.data() + i * n;
    for (Index p = 0; p < k; ++p) {
      const double aip = a(i, p);
      for (Index j = 0; j < n; ++j) {
        out_row[j] += aip * b(p, j);
      }
    }
  }
  return out;
}

double relative_frobenius_error(const Eigen::Ref<const Matrix>& approx,
                                const Eigen::Ref<const Matrix>& exact) {
  if (approx.rows() != exact.rows() || approx.cols() != exact.cols()) {
    throw ShapeError("relative_frobenius_error: shape mismatch");
  }
  const double denom = std::max(exact.norm(), 1e-30);
  return (approx - exact).norm() / denom;
}

}  // namespace lbpwht
