#pragma once

#include <optional>
#include <variant>

#include "lbpwht/base_selection.hpp"
#include "lbpwht/types.hpp"
#include "lbpwht/wht.hpp"

namespace lbpwht {

// Backward-pass flavors for a linear layer y = x * w^T.
struct ExactMode {};

struct LbpWhtMode {
  BaseIndexSet bases;
  WhtPlan plan;
};

// Frozen base weight plus trained adapter pair: y = x * w^T + x * (w_a * w_b).
// w_a is c_x x rank, w_b is rank x c_y.
struct LoraMode {
  int rank = 1;
  Matrix w_a;
  Matrix w_b;
};

using BpMode = std::variant<ExactMode, LbpWhtMode, LoraMode>;

struct Gradients {
  Matrix g_x;                  // L x c_x
  Matrix g_w;                  // c_y x c_x (absent values are zero-sized in Lora mode)
  std::optional<Matrix> g_wa;  // c_x x rank, Lora only
  std::optional<Matrix> g_wb;  // rank x c_y, Lora only
};

// One linear layer: weight w (c_y x c_x), the input cached by the most recent
// forward call, and the backward mode. Forward/backward operate on a single
// L x c_x token map; callers handle batches as independent maps.
class LinearLayerState {
 public:
  LinearLayerState(Matrix w, BpMode mode);

  Index in_channels() const { return w_.cols(); }
  Index out_channels() const { return w_.rows(); }
  const Matrix& weight() const { return w_; }
  Matrix& weight() { return w_; }
  const BpMode& mode() const { return mode_; }
  BpMode& mode() { return mode_; }
  bool has_cached_input() const { return cached_x_.has_value(); }
  const Matrix& cached_input() const;

  friend Matrix linear_forward(LinearLayerState& state, const Matrix& x);

 private:
  Matrix w_;
  BpMode mode_;
  std::optional<Matrix> cached_x_;
};

// y = x * w^T, plus x * (w_a * w_b) in Lora mode; caches x for backward.
Matrix linear_forward(LinearLayerState& state, const Matrix& x);

// Full-rank backward: g_w = g_y^T * x, g_x = g_y * w.
Gradients exact_backward(const LinearLayerState& state, const Matrix& g_y);

// Low-rank backward through the selected bases:
//   xhat   = project(x)         ghat_y = project(g_y)
//   ghat_w = ghat_y^T * xhat    ghat_x = ghat_y * w
//   g_x    = reverse_project(ghat_x)
// g_w needs no reverse projection; it already lives in weight space.
Gradients lbp_wht_backward(const LinearLayerState& state, const Matrix& g_y);

// Adapter-only backward; the base weight stays frozen (g_w is empty):
//   g_wa = x^T * g_y * w_b^T    g_wb = w_a^T * x^T * g_y
//   g_x  = g_y * (w + (w_a * w_b)^T)
Gradients lora_backward(const LinearLayerState& state, const Matrix& g_y);

// Dispatch on the layer's mode.
Gradients backward(const LinearLayerState& state, const Matrix& g_y);

struct GradientError {
  double err_gx = 0.0;
  double err_gw = 0.0;
};

// Relative Frobenius errors of approx vs exact for both gradients.
GradientError gradient_error(const Gradients& exact, const Gradients& approx);

}  // namespace lbpwht
