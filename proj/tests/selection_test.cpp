#include <doctest.h>

#include <algorithm>
#include <set>

#include "lbpwht/base_selection.hpp"
#include "lbpwht/errors.hpp"
#include "lbpwht/rng.hpp"
#include "oracles.hpp"

using namespace lbpwht;

namespace {

std::set<std::pair<int, int>> as_set(const BaseIndexSet& s) {
  std::set<std::pair<int, int>> out;
  for (const BaseIndex& b : s.indices) out.insert({b.i, b.j});
  return out;
}

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("triangular low-pass: members, order and rank") {
    const BaseIndexSet s = lp_l1_select(2, 8);
    REQUIRE(s.rank() == 3);
    CHECK(s.indices[0] == BaseIndex{0, 0});
    CHECK(s.indices[1] == BaseIndex{0, 1});
    CHECK(s.indices[2] == BaseIndex{1, 0});
    CHECK(lp_l1_select(1, 8).rank() == 1);
    CHECK(lp_l1_select(4, 8).rank() == 10);
    CHECK(lp_l1_select(6, 8).rank() == 21);
    CHECK(lp_l1_select(7, 8).rank() == 28);
    CHECK(lp_l1_select(8, 8).rank() == 36);
  }

  TEST_CASE("closed-form cardinalities hold for every valid parameter") {
    for (int n : {2, 4, 8, 16}) {
      for (int p = 1; p <= n; ++p) {
        CHECK(lp_l1_select(p, n).rank() == p * (p + 1) / 2);
        CHECK(lp_linf_select(p, n).rank() == p * p);
      }
    }
  }

  TEST_CASE("square low-pass basics") {
    CHECK(lp_linf_select(3, 8).rank() == 9);
    const BaseIndexSet one = lp_linf_select(1, 8);
    REQUIRE(one.rank() == 1);
    CHECK(one.indices[0] == BaseIndex{0, 0});
    CHECK(lp_linf_select(8, 8).rank() == 64);  // full grid
  }

  TEST_CASE("parameters beyond the grid are rejected") {
    CHECK_THROWS_AS(lp_l1_select(9, 8), ConfigError);
    CHECK_THROWS_AS(lp_linf_select(5, 4), ConfigError);
    CHECK_THROWS_AS(lp_l1_select(0, 8), ConfigError);
  }

  TEST_CASE("selections nest as the parameter grows") {
    for (int p = 1; p < 8; ++p) {
      const auto small = as_set(lp_l1_select(p, 8));
      const auto big = as_set(lp_l1_select(p + 1, 8));
      CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
      const auto small_inf = as_set(lp_linf_select(p, 8));
      const auto big_inf = as_set(lp_linf_select(p + 1, 8));
      CHECK(std::includes(big_inf.begin(), big_inf.end(), small_inf.begin(), small_inf.end()));
    }
  }

  TEST_CASE("constant-row gradients put all profiled energy on the DC base") {
    const WhtPlan plan = WhtPlan::with_order(4, 16);  // no padding
    Matrix g(16, 3);
    for (Index t = 0; t < 16; ++t) g.row(t) << 1.0, -2.0, 0.5;
    EnergyProfile profile(4);
    lhe_profile_step(profile, g, plan);
    CHECK(profile.steps_seen == 1);
    CHECK(profile.energy(0, 0) > 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i || j) CHECK(profile.energy(i, j) <= 1e-10);
  }

  TEST_CASE("a single base pattern concentrates energy on its own cell") {
    const WhtPlan plan = WhtPlan::with_order(4, 16);
    const FlatBase base = make_flat_base({1, 2}, plan);
    Matrix g(16, 1);
    for (Index t = 0; t < 16; ++t) g(t, 0) = base.values[t];
    EnergyProfile profile(4);
    lhe_profile_step(profile, g, plan);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i == 1 && j == 2) CHECK(profile.energy(i, j) > 1.0);
        else CHECK(profile.energy(i, j) <= 1e-10);
      }
    }
  }

  TEST_CASE("profiling is additive over steps") {
    const WhtPlan plan = WhtPlan::with_order(4, 16);
    Rng rng(5);
    const Matrix g1 = random_normal_matrix(16, 4, rng);
    const Matrix g2 = random_normal_matrix(16, 4, rng);
    EnergyProfile both(4), first(4), second(4);
    lhe_profile_step(both, g1, plan);
    lhe_profile_step(both, g2, plan);
    lhe_profile_step(first, g1, plan);
    lhe_profile_step(second, g2, plan);
    CHECK(both.steps_seen == 2);
    CHECK((both.energy - (first.energy + second.energy)).cwiseAbs().maxCoeff() <= 1e-9);
  }

  TEST_CASE("selection is invariant to the profiling order") {
    const WhtPlan plan = WhtPlan::with_order(4, 16);
    Rng rng(6);
    const Matrix g1 = random_normal_matrix(16, 4, rng);
    const Matrix g2 = random_normal_matrix(16, 4, rng);
    EnergyProfile ab(4), ba(4);
    lhe_profile_step(ab, g1, plan);
    lhe_profile_step(ab, g2, plan);
    lhe_profile_step(ba, g2, plan);
    lhe_profile_step(ba, g1, plan);
    CHECK(as_set(lhe_select(ab, 5)) == as_set(lhe_select(ba, 5)));
  }

  TEST_CASE("top-r selection basics and tie-break") {
    EnergyProfile profile(4);
    profile.steps_seen = 1;
    profile.energy(0, 0) = 3.0;
    CHECK(as_set(lhe_select(profile, 1)) == std::set<std::pair<int, int>>{{0, 0}});

    EnergyProfile flat(4);
    flat.steps_seen = 1;
    flat.energy.setConstant(1.0);
    const BaseIndexSet tie = lhe_select(flat, 3);
    REQUIRE(tie.rank() == 3);
    CHECK(tie.indices[0] == BaseIndex{0, 0});
    CHECK(tie.indices[1] == BaseIndex{0, 1});
    CHECK(tie.indices[2] == BaseIndex{1, 0});
  }

  TEST_CASE("low-frequency signals select the low-pass triangle") {
    // Signal synthesized strictly from the three lowest bases, no padding.
    const WhtPlan plan = WhtPlan::with_order(4, 16);
    const BaseIndexSet low = lp_l1_select(2, 4);
    Rng rng(7);
    Matrix coeffs(3, 5);
    for (Index i = 0; i < 3; ++i)
      for (Index c = 0; c < 5; ++c) coeffs(i, c) = rng.normal() + 2.0;
    const Matrix g = reverse_project(coeffs, low.indices, plan);
    EnergyProfile profile(4);
    lhe_profile_step(profile, g, plan);
    CHECK(as_set(lhe_select(profile, 3)) == as_set(low));
  }

  TEST_CASE("empty profiles cannot select") {
    EnergyProfile profile(4);
    CHECK_THROWS_AS(lhe_select(profile, 2), ConfigError);
    profile.steps_seen = 1;
    CHECK_THROWS_AS(lhe_select(profile, 17), ConfigError);
  }

  TEST_CASE("JSON round trip preserves the selection") {
    const BaseIndexSet s = lp_l1_select(3, 8);
    const BaseIndexSet back = BaseIndexSet::from_json(s.to_json());
    CHECK(back.strategy == SelectionStrategy::LpL1);
    CHECK(back.n == 8);
    CHECK(back.param == 3);
    REQUIRE(back.rank() == s.rank());
    for (int k = 0; k < s.rank(); ++k) CHECK(back.indices[k] == s.indices[k]);
    CHECK_THROWS_AS(BaseIndexSet::from_json("{not json"), FormatError);
  }
}
