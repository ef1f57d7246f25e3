#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lbpwht/base_selection.hpp"
#include "lbpwht/dataset.hpp"
#include "lbpwht/model.hpp"

namespace lbpwht {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double momentum = 0.0;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Backward-mode request for one linear layer, as it appears in config files.
// LHE selections are resolved inside train() after the profiling phase.
struct LayerModeConfig {
  enum class Kind { Exact, LbpWht, Lora };
  Kind kind = Kind::Exact;
  SelectionStrategy strategy = SelectionStrategy::LpL1;  // lbp_wht only
  int param = 1;          // lp_l1 / lp_linf parameter, or rank for lhe
  int profile_steps = 8;  // lhe only
  int lora_rank = 8;      // lora only
};

struct TrainConfig {
  std::uint64_t seed = 0;
  int epochs = 1;
  Index batch_size = 1;
  double learning_rate = 1e-3;
  OptimizerConfig optimizer;
  int frozen_prefix = 0;  // leading entries of the layer stack excluded from updates
  DatasetSpec dataset;
  std::vector<Index> hidden;
  Activation activation = Activation::Gelu;
  std::vector<LayerModeConfig> bp_modes;  // one per linear layer

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  static TrainConfig from_file(const std::filesystem::path& path);
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double eval_acc = 0.0;
  double cum_mflops = 0.0;  // analytical backward FLOPs so far, in MFLOPs
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  std::int64_t backward_flops = 0;
  double wall_seconds = 0.0;  // measurement only; excluded from determinism guarantees

  double final_eval_acc() const { return epochs.empty() ? 0.0 : epochs.back().eval_acc; }
  double total_mflops() const { return static_cast<double>(backward_flops) / 1e6; }

  // epoch,train_loss,train_acc,eval_acc,cum_mflops with full-precision floats.
  void write_csv(std::ostream& out) const;
  std::string to_json() const;
};

// Full-precision, locale-independent float formatting used by every CSV/JSON
// writer ("%.17g": reads back to the identical double).
std::string format_double(double v);

}  // namespace lbpwht
