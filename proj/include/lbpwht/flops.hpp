#pragma once

#include <cstdint>
#include <string>

namespace lbpwht {

// Analytical FLOP model for one backward pass through a linear layer with
// input channels c_x, output channels c_y, token count l and projection rank
// r. Projection work is counted at (c_x + c_y) * l * r: the transform uses
// additions/subtractions only, one per matrix cell touched.
struct FlopReport {
  std::int64_t vanilla_bp = 0;          // 4 * c_x * c_y * l
  std::int64_t projection = 0;          // (c_x + c_y) * l * r
  std::int64_t lowrank_mm = 0;          // 4 * c_x * c_y * r
  std::int64_t reverse_projection = 0;  // c_x * l * r
  std::int64_t total_lbp = 0;           // projection + lowrank_mm + reverse_projection
  std::int64_t overhead = 0;            // projection + reverse_projection
  double speedup = 0.0;                 // vanilla_bp / total_lbp

  std::string to_json() const;
};

FlopReport backward_flop_report(std::int64_t c_x, std::int64_t c_y, std::int64_t l,
                                std::int64_t r);

// Backward cost with a frozen base weight and trained rank-`rank` adapter
// pair: the full-width input-gradient product cannot be avoided, only the
// adapter gradients run at low rank.
std::int64_t lora_backward_flops(std::int64_t c_x, std::int64_t c_y, std::int64_t l,
                                 std::int64_t rank);

}  // namespace lbpwht
