#include "lbpwht/wht.hpp"

#include <bit>
#include <cstdio>

#include "lbpwht/errors.hpp"

namespace lbpwht {

namespace {

bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

int log2_exact(int n) { return std::countr_zero(static_cast<unsigned>(n)); }

// Sequency index of natural (Hadamard) row k: bit-reverse k, then convert
// from Gray code to binary.
int sequency_of_natural(int k, int bits) {
  unsigned rev = 0;
  for (int b = 0; b < bits; ++b) rev |= ((static_cast<unsigned>(k) >> b) & 1u) << (bits - 1 - b);
  unsigned bin = rev;
  for (unsigned shift = 1; shift < static_cast<unsigned>(bits); shift <<= 1) bin ^= bin >> shift;
  return static_cast<int>(bin);
}

void check_base_indices(std::span<const BaseIndex> bases, const WhtPlan& plan,
                        const char* where) {
  if (bases.empty()) throw ShapeError(std::string(where) + ": empty base list");
  for (const BaseIndex& b : bases) {
    if (b.i < 0 || b.j < 0 || b.i >= plan.n || b.j >= plan.n) {
      char msg[96];
      std::snprintf(msg, sizeof(msg), "%s: base index (%d,%d) outside order-%d grid", where, b.i,
                    b.j, plan.n);
      throw ShapeError(msg);
    }
  }
}

void check_signal_rows(const Matrix& x, const WhtPlan& plan, const char* where) {
  if (x.rows() != plan.signal_len) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "%s: input has %ld rows, plan expects %ld", where,
                  static_cast<long>(x.rows()), static_cast<long>(plan.signal_len));
    throw ShapeError(msg);
  }
}

// Transform a contiguous length-n block to sequency-ordered coefficients.
void fwht_block(double* data, const WhtPlan& plan, double* scratch) {
  const int n = plan.n;
  fast_wht_butterfly(std::span<double>(data, static_cast<std::size_t>(n)));
  for (int k = 0; k < n; ++k) scratch[plan.ordering[k]] = data[k];
  std::copy(scratch, scratch + n, data);
}

// Full 2D transform of an n*n row-major grid: 1D transform of every row, then
// of every column. The sequency-ordered Walsh matrix is symmetric, so this
// same routine serves both analysis (signal -> coefficients) and synthesis
// (coefficients placed at their sequency cells -> signal).
void fwht_grid(std::vector<double>& grid, const WhtPlan& plan) {
  const int n = plan.n;
  std::vector<double> scratch(n);
  std::vector<double> col(n);
  for (int a = 0; a < n; ++a) fwht_block(grid.data() + a * n, plan, scratch.data());
  for (int b = 0; b < n; ++b) {
    for (int a = 0; a < n; ++a) col[a] = grid[a * n + b];
    fwht_block(col.data(), plan, scratch.data());
    for (int a = 0; a < n; ++a) grid[a * n + b] = col[a];
  }
}

}  // namespace

WhtPlan WhtPlan::with_order(int n, Index signal_len) {
  if (!is_pow2(n)) throw ConfigError("wht plan: order must be a power of two");
  const Index padded = static_cast<Index>(n) * n;
  if (signal_len < 1) throw ConfigError("wht plan: signal length must be >= 1");
  if (signal_len > padded) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "wht plan: signal length %ld exceeds order-%d capacity %ld",
                  static_cast<long>(signal_len), n, static_cast<long>(padded));
    throw ConfigError(msg);
  }
  WhtPlan plan;
  plan.n = n;
  plan.padded_len = padded;
  plan.signal_len = signal_len;
  plan.norm_scale = 1.0 / static_cast<double>(n);
  plan.ordering.resize(n);
  const int bits = log2_exact(n);
  for (int k = 0; k < n; ++k) plan.ordering[k] = sequency_of_natural(k, bits);
  return plan;
}

WhtPlan WhtPlan::for_signal(Index signal_len) {
  int n = 1;
  while (static_cast<Index>(n) * n < signal_len) n <<= 1;
  return with_order(n, signal_len);
}

void fast_wht_butterfly(std::span<double> data) {
  const std::size_t n = data.size();
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len << 1) {
      for (std::size_t j = i; j < i + len; ++j) {
        const double a = data[j];
        const double b = data[j + len];
        data[j] = a + b;
        data[j + len] = a - b;
      }
    }
  }
}

Vector fast_wht_1d(const Vector& v, const WhtPlan& plan) {
  if (v.size() != plan.n) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "fast_wht_1d: vector length %ld, plan order %d",
                  static_cast<long>(v.size()), plan.n);
    throw ShapeError(msg);
  }
  Vector out = v;
  std::vector<double> scratch(plan.n);
  fwht_block(out.data(), plan, scratch.data());
  return out;
}

FlatBase make_flat_base(BaseIndex index, const WhtPlan& plan) {
  check_base_indices(std::span<const BaseIndex>(&index, 1), plan, "make_flat_base");
  const int n = plan.n;
  const int bits = log2_exact(n);
  // Sequency-ordered Walsh rows, from the Sylvester sign rule on the natural
  // index: H[k][t] = (-1)^popcount(k & t).
  auto walsh_row = [&](int seq, int t) {
    int nat = 0;
    for (int k = 0; k < n; ++k) {
      if (sequency_of_natural(k, bits) == seq) {
        nat = k;
        break;
      }
    }
    return (std::popcount(static_cast<unsigned>(nat & t)) & 1) ? -1 : 1;
  };
  FlatBase base;
  base.index = index;
  base.values.resize(plan.padded_len);
  for (int a = 0; a < n; ++a) {
    const int wi = walsh_row(index.i, a);
    for (int b = 0; b < n; ++b) base.values[a * n + b] = wi * walsh_row(index.j, b);
  }
  return base;
}

std::vector<FlatBase> build_flat_bases(const WhtPlan& plan) {
  // Build each 1D row once via unit-impulse transforms instead of the
  // quadratic lookup in make_flat_base.
  const int n = plan.n;
  Matrix rows(n, n);
  std::vector<double> scratch(n);
  for (int s = 0; s < n; ++s) {
    std::vector<double> impulse(n, 0.0);
    impulse[s] = 1.0;
    // W is symmetric: transforming a unit impulse at position s yields column
    // s of W, which equals row s.
    fwht_block(impulse.data(), plan, scratch.data());
    for (int t = 0; t < n; ++t) rows(s, t) = impulse[t];
  }
  std::vector<FlatBase> bases;
  bases.reserve(static_cast<std::size_t>(plan.padded_len));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      FlatBase base;
      base.index = {i, j};
      base.values.resize(plan.padded_len);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          base.values[a * n + b] = static_cast<int>(rows(i, a)) * static_cast<int>(rows(j, b));
      bases.push_back(std::move(base));
    }
  }
  return bases;
}

Matrix base_matrix(std::span<const BaseIndex> bases, const WhtPlan& plan) {
  check_base_indices(bases, plan, "base_matrix");
  Matrix p(plan.padded_len, static_cast<Index>(bases.size()));
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const FlatBase base = make_flat_base(bases[k], plan);
    for (Index t = 0; t < plan.padded_len; ++t) p(t, static_cast<Index>(k)) = base.values[t];
  }
  return p;
}

Matrix project(const Matrix& x, std::span<const BaseIndex> bases, const WhtPlan& plan) {
  check_base_indices(bases, plan, "project");
  check_signal_rows(x, plan, "project");
  const int n = plan.n;
  const Index cols = x.cols();
  Matrix out(static_cast<Index>(bases.size()), cols);
  std::vector<double> grid(static_cast<std::size_t>(plan.padded_len));
  for (Index c = 0; c < cols; ++c) {
    std::fill(grid.begin(), grid.end(), 0.0);
    for (Index t = 0; t < plan.signal_len; ++t) grid[t] = x(t, c);
    fwht_grid(grid, plan);
    for (std::size_t k = 0; k < bases.size(); ++k) {
      out(static_cast<Index>(k), c) = plan.norm_scale * grid[bases[k].i * n + bases[k].j];
    }
  }
  return out;
}

Matrix project_naive(const Matrix& x, std::span<const BaseIndex> bases, const WhtPlan& plan) {
  check_base_indices(bases, plan, "project");
  check_signal_rows(x, plan, "project");
  Matrix padded = Matrix::Zero(plan.padded_len, x.cols());
  padded.topRows(plan.signal_len) = x;
  const Matrix p = base_matrix(bases, plan);
  return plan.norm_scale * (p.transpose() * padded);
}

Matrix reverse_project(const Matrix& xhat, std::span<const BaseIndex> bases, const WhtPlan& plan) {
  check_base_indices(bases, plan, "reverse_project");
  if (xhat.rows() != static_cast<Index>(bases.size())) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "reverse_project: %ld coefficient rows for %zu bases",
                  static_cast<long>(xhat.rows()), bases.size());
    throw ShapeError(msg);
  }
  const int n = plan.n;
  const Index cols = xhat.cols();
  Matrix out(plan.signal_len, cols);
  std::vector<double> grid(static_cast<std::size_t>(plan.padded_len));
  for (Index c = 0; c < cols; ++c) {
    std::fill(grid.begin(), grid.end(), 0.0);
    for (std::size_t k = 0; k < bases.size(); ++k) {
      grid[bases[k].i * n + bases[k].j] += xhat(static_cast<Index>(k), c);
    }
    fwht_grid(grid, plan);
    for (Index t = 0; t < plan.signal_len; ++t) out(t, c) = plan.norm_scale * grid[t];
  }
  return out;
}

Matrix reverse_project_naive(const Matrix& xhat, std::span<const BaseIndex> bases,
                             const WhtPlan& plan) {
  check_base_indices(bases, plan, "reverse_project");
  if (xhat.rows() != static_cast<Index>(bases.size())) {
    throw ShapeError("reverse_project: coefficient row count does not match base list");
  }
  const Matrix p = base_matrix(bases, plan);
  const Matrix padded = plan.norm_scale * (p * xhat);
  return padded.topRows(plan.signal_len);
}

Matrix project_all(const Matrix& x, const WhtPlan& plan) {
  check_signal_rows(x, plan, "project_all");
  const Index cols = x.cols();
  Matrix out(plan.padded_len, cols);
  std::vector<double> grid(static_cast<std::size_t>(plan.padded_len));
  for (Index c = 0; c < cols; ++c) {
    std::fill(grid.begin(), grid.end(), 0.0);
    for (Index t = 0; t < plan.signal_len; ++t) grid[t] = x(t, c);
    fwht_grid(grid, plan);
    for (Index t = 0; t < plan.padded_len; ++t) out(t, c) = plan.norm_scale * grid[t];
  }
  return out;
}

}  // namespace lbpwht
