#pragma once

#include <string>
#include <vector>

#include "lbpwht/types.hpp"
#include "lbpwht/wht.hpp"

namespace lbpwht {

enum class SelectionStrategy { LpL1, LpLinf, Lhe };

// An ordered set of selected 2D bases. For the low-pass strategies the rank
// follows from the parameter in closed form: LP_L1 with parameter p keeps the
// p(p+1)/2 pairs with i+j <= p-1; LP_Linf with parameter p keeps the p^2
// pairs with max(i,j) <= p-1.
struct BaseIndexSet {
  SelectionStrategy strategy = SelectionStrategy::LpL1;
  int n = 1;      // base grid order
  int param = 1;  // LP_L1 / LP_Linf parameter, or r for LHE
  std::vector<BaseIndex> indices;

  int rank() const { return static_cast<int>(indices.size()); }
  std::string strategy_label() const;

  std::string to_json() const;
  static BaseIndexSet from_json(const std::string& text);
};

// Triangular low-pass selection: all (i, j) with i + j <= r_l1 - 1, ordered
// by (i + j, then i). Requires 1 <= r_l1 <= n.
BaseIndexSet lp_l1_select(int r_l1, int n);

// Square low-pass selection: all (i, j) with max(i, j) <= r_inf - 1, same
// ordering. Requires 1 <= r_inf <= n.
BaseIndexSet lp_linf_select(int r_inf, int n);

// Accumulated squared projection coefficients, one cell per base.
struct EnergyProfile {
  explicit EnergyProfile(int order) : n(order), energy(Matrix::Zero(order, order)) {}
  int n;
  Matrix energy;  // n x n, nonnegative
  long steps_seen = 0;
};

// Adds one observation: for every base (i, j), the sum over channels of the
// squared projection coefficients of g_y. Energy accumulates; it is never
// averaged (top-r selection is invariant to the constant factor).
void lhe_profile_step(EnergyProfile& profile, const Matrix& g_y, const WhtPlan& plan);

// Top-r bases by accumulated energy; ties broken by (i + j, then i)
// ascending. Requires at least one profiled step.
BaseIndexSet lhe_select(const EnergyProfile& profile, int r);

}  // namespace lbpwht
