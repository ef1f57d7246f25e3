#include <doctest.h>

#include <nlohmann/json.hpp>

#include "lbpwht/errors.hpp"
#include "lbpwht/flops.hpp"

using namespace lbpwht;

TEST_SUITE("flops") {
  TEST_CASE("worked large-layer instance, exact integers") {
    const FlopReport rep = backward_flop_report(3072, 768, 49, 8);
    CHECK(rep.vanilla_bp == 462422016);
    CHECK(rep.projection == 1505280);
    CHECK(rep.lowrank_mm == 75497472);
    CHECK(rep.reverse_projection == 1204224);
    CHECK(rep.total_lbp == 78206976);
    CHECK(rep.overhead == 2709504);
    CHECK(rep.speedup > 5.90);
    CHECK(rep.speedup < 5.93);
    // projection + reverse projection stay a sub-percent fraction of the
    // full-rank backward cost.
    CHECK(static_cast<double>(rep.overhead) / rep.vanilla_bp < 0.006);
  }

  TEST_CASE("rank equal to the token count makes the low-rank matmul cost coincide") {
    const FlopReport rep = backward_flop_report(31, 17, 23, 23);
    CHECK(rep.lowrank_mm == rep.vanilla_bp);
    CHECK(rep.total_lbp > rep.vanilla_bp);  // overhead pushes past vanilla
    CHECK(rep.speedup < 1.0);
  }

  TEST_CASE("hand-evaluated small instance") {
    const FlopReport rep = backward_flop_report(2, 3, 4, 2);
    CHECK(rep.vanilla_bp == 96);
    CHECK(rep.projection == 40);
    CHECK(rep.lowrank_mm == 48);
    CHECK(rep.reverse_projection == 16);
    CHECK(rep.total_lbp == 104);
    CHECK(rep.overhead == 56);
  }

  TEST_CASE("derived fields are consistent by construction") {
    for (int r : {1, 3, 10, 36}) {
      const FlopReport rep = backward_flop_report(32, 64, 49, r);
      CHECK(rep.total_lbp == rep.projection + rep.lowrank_mm + rep.reverse_projection);
      CHECK(rep.overhead == rep.projection + rep.reverse_projection);
      CHECK(rep.speedup ==
            static_cast<double>(rep.vanilla_bp) / static_cast<double>(rep.total_lbp));
    }
  }

  TEST_CASE("non-positive dimensions are rejected") {
    CHECK_THROWS_AS(backward_flop_report(0, 1, 1, 1), ConfigError);
    CHECK_THROWS_AS(backward_flop_report(1, 1, 1, 0), ConfigError);
    CHECK_THROWS_AS(lora_backward_flops(1, 0, 1, 1), ConfigError);
  }

  TEST_CASE("adapter backward cost keeps the full-width input-gradient term") {
    // 2*l*cx*cy survives any rank; the rank-dependent part scales linearly.
    const std::int64_t base = lora_backward_flops(32, 64, 49, 1);
    const std::int64_t big = lora_backward_flops(32, 64, 49, 8);
    CHECK(base > 2 * 49 * 32 * 64);
    CHECK(big - base == 7 * 2 * 49 * (3 * 32 + 2 * 64));
  }

  TEST_CASE("JSON report carries integer fields plus float speedup") {
    const FlopReport rep = backward_flop_report(3072, 768, 49, 8);
    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j.at("vanilla_bp").is_number_integer());
    CHECK(j.at("vanilla_bp").get<std::int64_t>() == 462422016);
    CHECK(j.at("total_lbp").get<std::int64_t>() == 78206976);
    CHECK(j.at("speedup").is_number_float());
  }
}
