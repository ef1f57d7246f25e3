#include "lbpwht/linear_backprop.hpp"

#include <cstdio>

#include "lbpwht/errors.hpp"
#include "lbpwht/matrix_ops.hpp"

namespace lbpwht {

namespace {

void check_cols(const Matrix& m, Index want, const char* what) {
  if (m.cols() != want) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "%s: expected %ld columns, got %ld", what,
                  static_cast<long>(want), static_cast<long>(m.cols()));
    throw ShapeError(msg);
  }
}

}  // namespace

LinearLayerState::LinearLayerState(Matrix w, BpMode mode)
    : w_(std::move(w)), mode_(std::move(mode)) {
  if (w_.rows() < 1 || w_.cols() < 1) throw ShapeError("linear layer: empty weight");
  if (const auto* lora = std::get_if<LoraMode>(&mode_)) {
    if (lora->w_a.rows() != w_.cols() || lora->w_a.cols() != lora->rank ||
        lora->w_b.rows() != lora->rank || lora->w_b.cols() != w_.rows()) {
      throw ShapeError("linear layer: adapter shapes do not match weight");
    }
  }
}

const Matrix& LinearLayerState::cached_input() const {
  if (!cached_x_) throw Error("linear layer: backward called before forward");
  return *cached_x_;
}

Matrix linear_forward(LinearLayerState& state, const Matrix& x) {
  check_cols(x, state.in_channels(), "linear_forward");
  Matrix y = matmul(x, state.w_.transpose());
  if (const auto* lora = std::get_if<LoraMode>(&state.mode_)) {
    y += matmul(matmul(x, lora->w_a), lora->w_b);
  }
  state.cached_x_ = x;
  return y;
}

Gradients exact_backward(const LinearLayerState& state, const Matrix& g_y) {
  const Matrix& x = state.cached_input();
  check_cols(g_y, state.out_channels(), "exact_backward");
  if (g_y.rows() != x.rows()) throw ShapeError("exact_backward: token count mismatch");
  Gradients g;
  g.g_w = matmul(g_y.transpose(), x);
  g.g_x = matmul(g_y, state.weight());
  return g;
}

Gradients lbp_wht_backward(const LinearLayerState& state, const Matrix& g_y) {
  const auto* mode = std::get_if<LbpWhtMode>(&state.mode());
  if (!mode) throw Error("lbp_wht_backward: layer is not in low-rank mode");
  const Matrix& x = state.cached_input();
  check_cols(g_y, state.out_channels(), "lbp_wht_backward");
  if (g_y.rows() != x.rows()) throw ShapeError("lbp_wht_backward: token count mismatch");

  const auto bases = std::span<const BaseIndex>(mode->bases.indices);
  const Matrix xhat = project(x, bases, mode->plan);
  const Matrix ghat_y = project(g_y, bases, mode->plan);
  Gradients g;
  g.g_w = matmul(ghat_y.transpose(), xhat);
  const Matrix ghat_x = matmul(ghat_y, state.weight());
  g.g_x = reverse_project(ghat_x, bases, mode->plan);
  return g;
}

Gradients lora_backward(const LinearLayerState& state, const Matrix& g_y) {
  const auto* mode = std::get_if<LoraMode>(&state.mode());
  if (!mode) throw Error("lora_backward: layer is not in adapter mode");
  const Matrix& x = state.cached_input();
  check_cols(g_y, state.out_channels(), "lora_backward");
  if (g_y.rows() != x.rows()) throw ShapeError("lora_backward: token count mismatch");

  Gradients g;
  const Matrix t1 = matmul(g_y, mode->w_b.transpose());  // L x rank
  g.g_wa = matmul(x.transpose(), t1);
  g.g_wb = matmul(matmul(x, mode->w_a).transpose(), g_y);
  g.g_x = matmul(g_y, state.weight()) + matmul(t1, mode->w_a.transpose());
  return g;
}

Gradients backward(const LinearLayerState& state, const Matrix& g_y) {
  if (std::holds_alternative<ExactMode>(state.mode())) return exact_backward(state, g_y);
  if (std::holds_alternative<LbpWhtMode>(state.mode())) return lbp_wht_backward(state, g_y);
  return lora_backward(state, g_y);
}

GradientError gradient_error(const Gradients& exact, const Gradients& approx) {
  GradientError e;
  e.err_gx = relative_frobenius_error(approx.g_x, exact.g_x);
  e.err_gw = relative_frobenius_error(approx.g_w, exact.g_w);
  return e;
}

}  // namespace lbpwht
