#pragma once

#include <span>
#include <vector>

#include "lbpwht/types.hpp"

namespace lbpwht {

// 2D base index (i, j), 0-based. Index (0, 0) is the all-ones (DC) base;
// larger indices mean higher sequency ("frequency").
struct BaseIndex {
  int i = 0;
  int j = 0;
  friend bool operator==(const BaseIndex&, const BaseIndex&) = default;
};

// Precomputed context for an order-n 2D Walsh-Hadamard transform applied to
// signals of length signal_len along the token dimension.
//
// The butterfly produces coefficients in natural (Hadamard) order. `ordering`
// maps natural index -> sequency index so that low indices correspond to low
// frequency; it is computed by bit-reversing the natural index and converting
// the result from Gray code to binary.
//
// Signals shorter than n^2 are zero-padded before the transform and truncated
// after the inverse. norm_scale = 1/sqrt(n^2) is applied symmetrically on both
// directions, so projecting with all n^2 bases and mapping back is exactly the
// identity on the padded signal.
struct WhtPlan {
  int n = 1;                  // side length, power of two
  Index padded_len = 1;       // n^2
  Index signal_len = 1;       // L <= n^2
  std::vector<int> ordering;  // natural -> sequency permutation of 0..n-1
  double norm_scale = 1.0;    // 1/sqrt(n^2)

  // Plan with explicit order n (n a power of two, n^2 >= signal_len).
  static WhtPlan with_order(int n, Index signal_len);
  // Smallest power-of-two order whose n^2 covers the signal.
  static WhtPlan for_signal(Index signal_len);
};

// One flattened 2D base: the outer product of sequency-ordered 1D Walsh rows
// i and j, flattened row-major to length n^2. Entries are +1/-1; the Gram
// matrix of all n^2 bases is n^2 * I in exact integer arithmetic.
struct FlatBase {
  BaseIndex index;
  IntVector values;  // length n^2
};

// Unnormalized 1D transform of a length-n vector: in-place butterfly, then
// reorder to sequency order. O(n log n) additions.
Vector fast_wht_1d(const Vector& v, const WhtPlan& plan);

// In-place butterfly in natural (Hadamard) order; building block for the
// above and for the per-column 2D fast path.
void fast_wht_butterfly(std::span<double> data);

FlatBase make_flat_base(BaseIndex index, const WhtPlan& plan);

// All n^2 bases, ordered row-major by (i, j).
std::vector<FlatBase> build_flat_bases(const WhtPlan& plan);

// The padded n^2 x r matrix whose k-th column is the k-th selected flattened
// base. Mostly useful for tests and small problems; the fast path below never
// materializes it.
Matrix base_matrix(std::span<const BaseIndex> bases, const WhtPlan& plan);

// Projection onto the selected bases: returns norm_scale * P^T * pad(x),
// an r x C matrix of coefficients (x is L x C, L <= padded_len).
// Fast path: per column, reshape the padded signal to n x n and run 1D
// butterflies over rows then columns, then gather the selected coefficients.
Matrix project(const Matrix& x, std::span<const BaseIndex> bases, const WhtPlan& plan);

// Reference implementation via the explicit base matrix; agrees with
// project() to ~1e-10 and exists so the two routes can check each other.
Matrix project_naive(const Matrix& x, std::span<const BaseIndex> bases, const WhtPlan& plan);

// Map r x C coefficients back: norm_scale * P * xhat, truncated to the first
// signal_len rows.
Matrix reverse_project(const Matrix& xhat, std::span<const BaseIndex> bases, const WhtPlan& plan);

Matrix reverse_project_naive(const Matrix& xhat, std::span<const BaseIndex> bases,
                             const WhtPlan& plan);

// Coefficients for all n^2 bases at once (padded_len x C, row k holds base
// (k / n, k % n)). Used by energy profiling and spectrum dumps.
Matrix project_all(const Matrix& x, const WhtPlan& plan);

}  // namespace lbpwht
