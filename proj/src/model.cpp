#include "lbpwht/model.hpp"

#include <cmath>

#include "lbpwht/errors.hpp"

namespace lbpwht {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

}  // namespace

Matrix ActivationLayer::forward(const Matrix& x) {
  cached_x = x;
  if (kind == Activation::Relu) return x.cwiseMax(0.0);
  return x.unaryExpr([](double v) { return gelu(v); });
}

Matrix ActivationLayer::backward(const Matrix& g_out) const {
  if (!cached_x) throw Error("activation: backward called before forward");
  const Matrix& x = *cached_x;
  if (g_out.rows() != x.rows() || g_out.cols() != x.cols()) {
    throw ShapeError("activation backward: gradient shape mismatch");
  }
  if (kind == Activation::Relu) {
    return g_out.cwiseProduct(x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  }
  return g_out.cwiseProduct(x.unaryExpr([](double v) { return gelu_grad(v); }));
}

Model::Model(const ModelSpec& spec, std::vector<BpMode> linear_modes, Rng& init_rng)
    : spec_(spec) {
  if (spec.tokens < 1 || spec.in_channels < 1) throw ConfigError("model: empty input geometry");
  if (spec.classes < 2) throw ConfigError("model: need at least 2 classes");
  std::vector<Index> widths;
  widths.push_back(spec.in_channels);
  for (Index h : spec.hidden) {
    if (h < 1) throw ConfigError("model: hidden width must be >= 1");
    widths.push_back(h);
  }
  widths.push_back(spec.classes);
  const std::size_t n_linear = widths.size() - 1;
  if (linear_modes.size() != n_linear) {
    throw ConfigError("model: need one backward mode per linear layer");
  }

  for (std::size_t l = 0; l < n_linear; ++l) {
    const Index c_in = widths[l];
    const Index c_out = widths[l + 1];
    Rng layer_rng = init_rng.child(0x200 + static_cast<std::uint64_t>(l));
    Matrix w = random_normal_matrix(c_out, c_in, layer_rng, 1.0 / std::sqrt(double(c_in)));
    BpMode mode = std::move(linear_modes[l]);
    if (auto* lora = std::get_if<LoraMode>(&mode)) {
      // Adapter starts as a no-op: w_a random, w_b zero.
      lora->w_a = random_normal_matrix(c_in, lora->rank, layer_rng,
                                       1.0 / std::sqrt(double(c_in)));
      lora->w_b = Matrix::Zero(lora->rank, c_out);
    }
    layers_.emplace_back(std::in_place_type<LinearLayerState>, std::move(w), std::move(mode));
    if (l + 1 < n_linear) {
      layers_.emplace_back(std::in_place_type<ActivationLayer>,
                           ActivationLayer{spec.activation, std::nullopt});
    }
  }
}

Matrix Model::forward(const Matrix& x) {
  Matrix h = x;
  for (Layer& layer : layers_) {
    h = std::visit(
        [&](auto& l) -> Matrix {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, LinearLayerState>) return linear_forward(l, h);
          else return l.forward(h);
        },
        layer);
  }
  return h;
}

Vector Model::logits(const Matrix& final_map) const {
  return final_map.colwise().mean().transpose();
}

Index Model::linear_count() const {
  Index count = 0;
  for (const Layer& layer : layers_)
    if (std::holds_alternative<LinearLayerState>(layer)) ++count;
  return count;
}

std::vector<std::size_t> Model::linear_positions() const {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (std::holds_alternative<LinearLayerState>(layers_[i])) pos.push_back(i);
  return pos;
}

}  // namespace lbpwht
