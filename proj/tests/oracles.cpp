#include "oracles.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace oracle {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("oracle matmul: shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

int sign_changes(const Eigen::RowVectorXd& row) {
  int changes = 0;
  for (Index t = 1; t < row.size(); ++t) {
    if ((row(t) > 0) != (row(t - 1) > 0)) ++changes;
  }
  return changes;
}

Matrix walsh_matrix(int n) {
  Matrix h(1, 1);
  h(0, 0) = 1.0;
  while (h.rows() < n) {
    const Index m = h.rows();
    Matrix next(2 * m, 2 * m);
    next.topLeftCorner(m, m) = h;
    next.topRightCorner(m, m) = h;
    next.bottomLeftCorner(m, m) = h;
    next.bottomRightCorner(m, m) = -h;
    h = next;
  }
  // Sequency order = ascending number of sign changes; the counts 0..n-1 are
  // all distinct, so the sort is a permutation.
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::sort(rows.begin(), rows.end(), [&](Index a, Index b) {
    return sign_changes(h.row(a)) < sign_changes(h.row(b));
  });
  Matrix w(n, n);
  for (int s = 0; s < n; ++s) w.row(s) = h.row(rows[static_cast<std::size_t>(s)]);
  return w;
}

Matrix base_matrix(std::span<const BaseIndex> bases, int n) {
  const Matrix w = walsh_matrix(n);
  Matrix p(static_cast<Index>(n) * n, static_cast<Index>(bases.size()));
  for (std::size_t k = 0; k < bases.size(); ++k) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        p(a * n + b, static_cast<Index>(k)) = w(bases[k].i, a) * w(bases[k].j, b);
      }
    }
  }
  return p;
}

namespace {

Matrix pad_rows(const Matrix& x, Index target) {
  Matrix padded = Matrix::Zero(target, x.cols());
  padded.topRows(x.rows()) = x;
  return padded;
}

}  // namespace

Matrix project(const Matrix& x, std::span<const BaseIndex> bases, int n) {
  const Matrix p = base_matrix(bases, n);
  const Matrix padded = pad_rows(x, static_cast<Index>(n) * n);
  return (1.0 / n) * matmul(p.transpose(), padded);
}

Matrix reverse_project(const Matrix& xhat, std::span<const BaseIndex> bases, int n,
                       Index signal_len) {
  const Matrix p = base_matrix(bases, n);
  const Matrix full = (1.0 / n) * matmul(p, xhat);
  return full.topRows(signal_len);
}

LowRankGradients lbp_backward(const Matrix& x, const Matrix& w, const Matrix& g_y,
                              std::span<const BaseIndex> bases, int n) {
  const Matrix ghat_y = project(g_y, bases, n);
  const Matrix xhat = project(x, bases, n);
  LowRankGradients g;
  g.g_w = matmul(ghat_y.transpose(), xhat);
  g.g_x = reverse_project(matmul(ghat_y, w), bases, n, x.rows());
  return g;
}

Matrix finite_difference(Matrix& param, const std::function<double()>& loss, double h) {
  Matrix grad(param.rows(), param.cols());
  for (Index i = 0; i < param.rows(); ++i) {
    for (Index j = 0; j < param.cols(); ++j) {
      const double saved = param(i, j);
      param(i, j) = saved + h;
      const double up = loss();
      param(i, j) = saved - h;
      const double down = loss();
      param(i, j) = saved;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace oracle
