#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lbpwht/types.hpp"

namespace lbpwht {

struct DatasetSpec {
  Index n_samples = 0;
  Index tokens = 0;    // L
  Index channels = 0;  // C
  int classes = 0;     // k
  std::uint64_t seed = 0;
  double difficulty = 0.0;  // white-noise amplitude added on top of the smooth structure
};

struct Dataset {
  std::vector<Matrix> samples;  // each tokens x channels
  std::vector<int> labels;
  Index tokens = 0;
  Index channels = 0;
  int classes = 0;

  Index size() const { return static_cast<Index>(samples.size()); }
};

// Deterministic class-conditional token maps. Every sample is a class
// prototype plus a small per-sample variation, both synthesized from the
// lowest-frequency 2D Walsh bases so the maps are smooth along the token
// dimension, plus difficulty * N(0,1) white noise per entry. Labels cycle
// round-robin over the classes; the split is the first 80% / last 20% of the
// generation order.
std::pair<Dataset, Dataset> make_synthetic_dataset(const DatasetSpec& spec);

}  // namespace lbpwht
