#pragma once

#include <utility>
#include <vector>

#include "lbpwht/dataset.hpp"
#include "lbpwht/model.hpp"
#include "lbpwht/train_config.hpp"

namespace lbpwht {

// Materialize the configured model. Low-pass selections are resolved here;
// LHE layers start with an empty selection that train() fills after its
// profiling phase.
Model build_model(const TrainConfig& config);

// Deterministic full training run. Identical config and data give an
// identical log (wall_seconds aside). Frozen-prefix layers propagate input
// gradients through their configured mode but never receive updates.
// Throws DivergenceError when a batch loss turns non-finite.
TrainLog train(Model& model, const TrainConfig& config, const Dataset& train_data,
               const Dataset& eval_data);

// Top-1 accuracy in [0, 1]; weights are left untouched. Empty dataset is an
// error.
double evaluate(Model& model, const Dataset& data);

// Slopes of the accuracy-vs-computation curve: (acc[k+1]-acc[k]) /
// (mflops[k+1]-mflops[k]) for consecutive points. Points must be sorted by
// flops with no duplicates.
std::vector<double> marginal_accuracy(const std::vector<std::pair<double, double>>& flops_acc);

}  // namespace lbpwht
