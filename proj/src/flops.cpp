#include "lbpwht/flops.hpp"

#include <nlohmann/json.hpp>

#include "lbpwht/errors.hpp"

namespace lbpwht {

FlopReport backward_flop_report(std::int64_t c_x, std::int64_t c_y, std::int64_t l,
                                std::int64_t r) {
  if (c_x < 1 || c_y < 1 || l < 1 || r < 1) {
    throw ConfigError("flop report: all dimensions must be positive");
  }
  FlopReport rep;
  rep.vanilla_bp = 4 * c_x * c_y * l;
  rep.projection = (c_x + c_y) * l * r;
  rep.lowrank_mm = 4 * c_x * c_y * r;
  rep.reverse_projection = c_x * l * r;
  rep.total_lbp = rep.projection + rep.lowrank_mm + rep.reverse_projection;
  rep.overhead = rep.projection + rep.reverse_projection;
  rep.speedup = static_cast<double>(rep.vanilla_bp) / static_cast<double>(rep.total_lbp);
  return rep;
}

std::int64_t lora_backward_flops(std::int64_t c_x, std::int64_t c_y, std::int64_t l,
                                 std::int64_t rank) {
  if (c_x < 1 || c_y < 1 || l < 1 || rank < 1) {
    throw ConfigError("lora flops: all dimensions must be positive");
  }
  // g_x through the frozen weight: 2*l*c_y*c_x, plus the adapter chain
  // evaluated in cheapest association order:
  //   t1 = g_y * w_b^T           2*l*c_y*rank
  //   g_wa = x^T * t1            2*c_x*l*rank
  //   t2 = x * w_a               2*l*c_x*rank
  //   g_wb = t2^T * g_y          2*rank*l*c_y
  //   g_x += t1 * w_a^T          2*l*rank*c_x
  return 2 * l * c_x * c_y + 2 * l * rank * (3 * c_x + 2 * c_y);
}

std::string FlopReport::to_json() const {
  nlohmann::json j;
  j["vanilla_bp"] = vanilla_bp;
  j["projection"] = projection;
  j["lowrank_mm"] = lowrank_mm;
  j["reverse_projection"] = reverse_projection;
  j["total_lbp"] = total_lbp;
  j["overhead"] = overhead;
  j["speedup"] = speedup;
  return j.dump(2);
}

}  // namespace lbpwht
