#include "lbpwht/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lbpwht/errors.hpp"
#include "lbpwht/flops.hpp"

namespace lbpwht {

namespace {

struct SoftmaxResult {
  double loss = 0.0;
  int predicted = 0;
  Vector grad;  // d loss / d logits
};

// Softmax cross-entropy with log-sum-exp stabilization.
SoftmaxResult softmax_cross_entropy(const Vector& logits, int label) {
  SoftmaxResult r;
  const double m = logits.maxCoeff(&r.predicted);
  const Vector shifted = logits.array() - m;
  const Vector exps = shifted.array().exp();
  const double sum = exps.sum();
  r.loss = std::log(sum) - shifted(label);
  r.grad = exps / sum;
  r.grad(label) -= 1.0;
  return r;
}

// Adam or momentum-SGD state for one parameter matrix.
struct ParamSlot {
  Matrix* param = nullptr;
  Matrix grad;  // batch accumulator
  Matrix m;     // first moment / velocity
  Matrix v;     // second moment (adam)
  bool trainable = true;

  void attach(Matrix* p, bool train) {
    param = p;
    trainable = train;
    grad = Matrix::Zero(p->rows(), p->cols());
    m = Matrix::Zero(p->rows(), p->cols());
    v = Matrix::Zero(p->rows(), p->cols());
  }
};

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, double lr) : config_(config), lr_(lr) {}

  void step(std::vector<ParamSlot>& slots) {
    ++t_;
    for (ParamSlot& s : slots) {
      if (!s.trainable) continue;
      if (config_.kind == OptimizerKind::Sgd) {
        s.m = config_.momentum * s.m + s.grad;
        *s.param -= lr_ * s.m;
      } else {
        s.m = config_.beta1 * s.m + (1.0 - config_.beta1) * s.grad;
        s.v = config_.beta2 * s.v + (1.0 - config_.beta2) * s.grad.cwiseProduct(s.grad);
        const double bc1 = 1.0 - std::pow(config_.beta1, t_);
        const double bc2 = 1.0 - std::pow(config_.beta2, t_);
        *s.param -= (lr_ / bc1) *
                    (s.m.array() / ((s.v.array() / bc2).sqrt() + config_.eps)).matrix();
      }
    }
  }

 private:
  OptimizerConfig config_;
  double lr_;
  long t_ = 0;
};

bool is_pending_lhe(const BpMode& mode) {
  const auto* lbp = std::get_if<LbpWhtMode>(&mode);
  return lbp && lbp->bases.indices.empty();
}

std::int64_t backward_flops_for(const LinearLayerState& layer, Index tokens) {
  const std::int64_t cx = layer.in_channels();
  const std::int64_t cy = layer.out_channels();
  if (const auto* lbp = std::get_if<LbpWhtMode>(&layer.mode())) {
    return backward_flop_report(cx, cy, tokens, lbp->bases.rank()).total_lbp;
  }
  if (const auto* lora = std::get_if<LoraMode>(&layer.mode())) {
    return lora_backward_flops(cx, cy, tokens, lora->rank);
  }
  return 4 * cx * cy * tokens;
}

void check_data(const Dataset& data, const TrainConfig& config, const char* which) {
  if (data.tokens != config.dataset.tokens || data.channels != config.dataset.channels ||
      data.classes != config.dataset.classes) {
    throw ConfigError(std::string("train: ") + which + " dataset does not match config geometry");
  }
}

}  // namespace

Model build_model(const TrainConfig& config) {
  ModelSpec spec;
  spec.tokens = config.dataset.tokens;
  spec.in_channels = config.dataset.channels;
  spec.classes = config.dataset.classes;
  spec.hidden = config.hidden;
  spec.activation = config.activation;

  const WhtPlan plan = WhtPlan::for_signal(spec.tokens);
  std::vector<BpMode> modes;
  for (const LayerModeConfig& m : config.bp_modes) {
    switch (m.kind) {
      case LayerModeConfig::Kind::Exact:
        modes.emplace_back(ExactMode{});
        break;
      case LayerModeConfig::Kind::Lora:
        modes.emplace_back(LoraMode{m.lora_rank, Matrix(), Matrix()});
        break;
      case LayerModeConfig::Kind::LbpWht: {
        LbpWhtMode mode;
        mode.plan = plan;
        if (m.strategy == SelectionStrategy::LpL1) {
          mode.bases = lp_l1_select(m.param, plan.n);
        } else if (m.strategy == SelectionStrategy::LpLinf) {
          mode.bases = lp_linf_select(m.param, plan.n);
        } else {
          // Pending LHE: indices stay empty until train() has profiled.
          mode.bases.strategy = SelectionStrategy::Lhe;
          mode.bases.n = plan.n;
          mode.bases.param = m.param;
        }
        modes.emplace_back(std::move(mode));
        break;
      }
    }
  }
  Rng init_rng = Rng(config.seed).child(0x6d6f64656cULL);  // model stream
  return Model(spec, std::move(modes), init_rng);
}

TrainLog train(Model& model, const TrainConfig& config, const Dataset& train_data,
               const Dataset& eval_data) {
  const auto t_start = std::chrono::steady_clock::now();
  check_data(train_data, config, "train");
  check_data(eval_data, config, "eval");
  if (train_data.size() < 1) throw ConfigError("train: empty training set");
  if (config.frozen_prefix >= static_cast<int>(model.layers().size())) {
    throw ConfigError("train: frozen prefix covers the whole model");
  }

  const Index tokens = train_data.tokens;
  const Index n_train = train_data.size();
  TrainLog log;

  // Parameter slots, one per trainable matrix, in layer order.
  std::vector<ParamSlot> slots;
  std::vector<std::vector<std::size_t>> layer_slots(model.layers().size());
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    auto* linear = std::get_if<LinearLayerState>(&model.layers()[li]);
    if (!linear) continue;
    const bool frozen = static_cast<int>(li) < config.frozen_prefix;
    if (auto* lora = std::get_if<LoraMode>(&linear->mode())) {
      // Base weight stays frozen in adapter mode; only w_a / w_b train.
      slots.emplace_back().attach(&lora->w_a, !frozen);
      layer_slots[li].push_back(slots.size() - 1);
      slots.emplace_back().attach(&lora->w_b, !frozen);
      layer_slots[li].push_back(slots.size() - 1);
    } else {
      slots.emplace_back().attach(&linear->weight(), !frozen);
      layer_slots[li].push_back(slots.size() - 1);
    }
  }

  // One backward sweep for a single sample; returns cross-entropy loss and
  // whether the prediction was correct. Accumulates weight gradients scaled
  // by `grad_scale` and the analytical FLOP count.
  const auto backprop_sample = [&](const Matrix& x, int label, double grad_scale,
                                   bool accumulate_grads, EnergyProfile* profiles,
                                   bool force_exact) {
    const Matrix final_map = model.forward(x);
    const Vector logits = model.logits(final_map);
    const SoftmaxResult head = softmax_cross_entropy(logits, label);

    // d loss / d final_map: the mean pool spreads the logit gradient evenly
    // over token rows.
    Matrix g = Matrix::Zero(final_map.rows(), final_map.cols());
    g.rowwise() += (grad_scale / static_cast<double>(final_map.rows())) *
                   head.grad.transpose();

    for (std::size_t li = model.layers().size(); li-- > 0;) {
      Layer& layer = model.layers()[li];
      if (auto* act = std::get_if<ActivationLayer>(&layer)) {
        g = act->backward(g);
        continue;
      }
      auto& linear = std::get<LinearLayerState>(layer);
      if (profiles && std::get_if<LbpWhtMode>(&linear.mode())) {
        lhe_profile_step(profiles[li], g, std::get<LbpWhtMode>(linear.mode()).plan);
      }
      Gradients grads;
      if (force_exact) {
        grads = exact_backward(linear, g);
        log.backward_flops += 4 * linear.in_channels() * linear.out_channels() * tokens;
      } else {
        grads = backward(linear, g);
        log.backward_flops += backward_flops_for(linear, tokens);
      }
      if (accumulate_grads) {
        const auto& sl = layer_slots[li];
        if (grads.g_wa) {
          slots[sl[0]].grad += *grads.g_wa;
          slots[sl[1]].grad += *grads.g_wb;
        } else {
          slots[sl[0]].grad += grads.g_w;
        }
      }
      g = std::move(grads.g_x);
    }
    return std::pair<double, bool>(head.loss, head.predicted == label);
  };

  // LHE profiling phase: exact backward over the leading batches, no updates.
  bool any_pending = false;
  for (auto& layer : model.layers()) {
    auto* linear = std::get_if<LinearLayerState>(&layer);
    if (linear && is_pending_lhe(linear->mode())) any_pending = true;
  }
  if (any_pending) {
    int profile_steps = 8;
    for (const LayerModeConfig& m : config.bp_modes) {
      if (m.kind == LayerModeConfig::Kind::LbpWht && m.strategy == SelectionStrategy::Lhe) {
        profile_steps = m.profile_steps;
      }
    }
    std::vector<EnergyProfile> profiles;
    const WhtPlan plan = WhtPlan::for_signal(tokens);
    profiles.reserve(model.layers().size());
    for (std::size_t li = 0; li < model.layers().size(); ++li) profiles.emplace_back(plan.n);

    Index s = 0;
    for (int step = 0; step < profile_steps && s < n_train; ++step) {
      for (Index b = 0; b < config.batch_size && s < n_train; ++b, ++s) {
        backprop_sample(train_data.samples[static_cast<std::size_t>(s)],
                        train_data.labels[static_cast<std::size_t>(s)], 1.0,
                        /*accumulate_grads=*/false, profiles.data(), /*force_exact=*/true);
      }
    }
    for (std::size_t li = 0; li < model.layers().size(); ++li) {
      auto* linear = std::get_if<LinearLayerState>(&model.layers()[li]);
      if (!linear || !is_pending_lhe(linear->mode())) continue;
      auto& mode = std::get<LbpWhtMode>(linear->mode());
      mode.bases = lhe_select(profiles[li], mode.bases.param);
    }
  }

  Optimizer optimizer(config.optimizer, config.learning_rate);
  Rng shuffle_rng = Rng(config.seed).child(0x73687566666cULL);  // shuffle stream

  std::vector<Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng epoch_rng = shuffle_rng.child(static_cast<std::uint64_t>(epoch));
    for (Index i = n_train - 1; i > 0; --i) {
      const Index j = static_cast<Index>(epoch_rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    double epoch_loss = 0.0;
    Index correct = 0;
    Index step = 0;
    for (Index start = 0; start < n_train; start += config.batch_size, ++step) {
      const Index count = std::min(config.batch_size, n_train - start);
      for (ParamSlot& s : slots) s.grad.setZero();
      double batch_loss = 0.0;
      for (Index b = 0; b < count; ++b) {
        const Index s = order[static_cast<std::size_t>(start + b)];
        const auto [loss, hit] =
            backprop_sample(train_data.samples[static_cast<std::size_t>(s)],
                            train_data.labels[static_cast<std::size_t>(s)],
                            1.0 / static_cast<double>(count), /*accumulate_grads=*/true,
                            nullptr, /*force_exact=*/false);
        batch_loss += loss / static_cast<double>(count);
        if (hit) ++correct;
      }
      if (!std::isfinite(batch_loss)) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), "training diverged: non-finite loss at epoch %d step %ld",
                      epoch, static_cast<long>(step));
        throw DivergenceError(msg);
      }
      epoch_loss += batch_loss * static_cast<double>(count);
      optimizer.step(slots);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(n_train);
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n_train);
    stats.eval_acc = eval_data.size() > 0 ? evaluate(model, eval_data) : 0.0;
    stats.cum_mflops = static_cast<double>(log.backward_flops) / 1e6;
    log.epochs.push_back(stats);
  }

  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return log;
}

double evaluate(Model& model, const Dataset& data) {
  if (data.size() < 1) throw ConfigError("evaluate: empty dataset");
  Index correct = 0;
  for (Index s = 0; s < data.size(); ++s) {
    const Matrix final_map = model.forward(data.samples[static_cast<std::size_t>(s)]);
    const Vector logits = model.logits(final_map);
    int predicted = 0;
    logits.maxCoeff(&predicted);
    if (predicted == data.labels[static_cast<std::size_t>(s)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<double> marginal_accuracy(const std::vector<std::pair<double, double>>& flops_acc) {
  if (flops_acc.size() < 2) throw ConfigError("marginal_accuracy: need at least two points");
  std::vector<double> slopes;
  for (std::size_t k = 1; k < flops_acc.size(); ++k) {
    const double df = flops_acc[k].first - flops_acc[k - 1].first;
    if (df == 0.0) throw ConfigError("marginal_accuracy: duplicate flops values");
    if (df < 0.0) throw ConfigError("marginal_accuracy: points must be sorted by flops");
    slopes.push_back((flops_acc[k].second - flops_acc[k - 1].second) / df);
  }
  return slopes;
}

}  // namespace lbpwht
