#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "lbpwht/linear_backprop.hpp"
#include "lbpwht/rng.hpp"
#include "lbpwht/types.hpp"

namespace lbpwht {

enum class Activation { Relu, Gelu };

// Elementwise activation with the usual cached-input backward.
struct ActivationLayer {
  Activation kind = Activation::Gelu;
  std::optional<Matrix> cached_x;

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& g_out) const;
};

using Layer = std::variant<LinearLayerState, ActivationLayer>;

struct ModelSpec {
  Index tokens = 0;
  Index in_channels = 0;
  int classes = 0;
  std::vector<Index> hidden;  // channel widths of the hidden linear layers
  Activation activation = Activation::Gelu;
};

// Stack of linear layers interleaved with activations, ending in a linear
// layer with `classes` output channels. Class scores are the mean over the
// token rows of the final map; the loss head (softmax cross-entropy) lives in
// the training loop.
class Model {
 public:
  Model(const ModelSpec& spec, std::vector<BpMode> linear_modes, Rng& init_rng);

  // Single sample: x is tokens x in_channels. Caches per-layer inputs.
  Matrix forward(const Matrix& x);
  // Mean over token rows of the final map.
  Vector logits(const Matrix& final_map) const;

  const ModelSpec& spec() const { return spec_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  Index linear_count() const;
  // Indices into layers() of the linear layers, in forward order.
  std::vector<std::size_t> linear_positions() const;

 private:
  ModelSpec spec_;
  std::vector<Layer> layers_;
};

}  // namespace lbpwht
