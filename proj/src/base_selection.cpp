#include "lbpwht/base_selection.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "lbpwht/errors.hpp"

namespace lbpwht {

namespace {

// Canonical order for selections and tie-breaks: by (i + j), then i.
bool diagonal_less(const BaseIndex& a, const BaseIndex& b) {
  if (a.i + a.j != b.i + b.j) return a.i + a.j < b.i + b.j;
  return a.i < b.i;
}

void check_param(int value, int n, const char* what) {
  if (value < 1) throw ConfigError(std::string(what) + " must be >= 1");
  if (value > n) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "%s %d exceeds base grid order %d", what, value, n);
    throw ConfigError(msg);
  }
}

const char* strategy_name(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::LpL1: return "lp_l1";
    case SelectionStrategy::LpLinf: return "lp_linf";
    case SelectionStrategy::Lhe: return "lhe";
  }
  return "?";
}

}  // namespace

std::string BaseIndexSet::strategy_label() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%d", strategy_name(strategy), param);
  return buf;
}

std::string BaseIndexSet::to_json() const {
  nlohmann::json j;
  j["strategy"] = strategy_label();
  j["n"] = n;
  nlohmann::json idx = nlohmann::json::array();
  for (const BaseIndex& b : indices) idx.push_back({b.i, b.j});
  j["indices"] = std::move(idx);
  return j.dump(2);
}

BaseIndexSet BaseIndexSet::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("base set: invalid JSON: ") + e.what());
  }
  BaseIndexSet set;
  try {
    const std::string label = j.at("strategy").get<std::string>();
    const auto dash = label.rfind('-');
    if (dash == std::string::npos) throw FormatError("base set: malformed strategy label");
    const std::string name = label.substr(0, dash);
    set.param = std::stoi(label.substr(dash + 1));
    if (name == "lp_l1") set.strategy = SelectionStrategy::LpL1;
    else if (name == "lp_linf") set.strategy = SelectionStrategy::LpLinf;
    else if (name == "lhe") set.strategy = SelectionStrategy::Lhe;
    else throw FormatError("base set: unknown strategy " + name);
    set.n = j.at("n").get<int>();
    for (const auto& pair : j.at("indices")) {
      set.indices.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("base set: ") + e.what());
  }
  return set;
}

BaseIndexSet lp_l1_select(int r_l1, int n) {
  check_param(r_l1, n, "lp_l1 parameter");
  BaseIndexSet set;
  set.strategy = SelectionStrategy::LpL1;
  set.n = n;
  set.param = r_l1;
  for (int s = 0; s <= r_l1 - 1; ++s) {
    for (int i = 0; i <= s; ++i) set.indices.push_back({i, s - i});
  }
  return set;
}

BaseIndexSet lp_linf_select(int r_inf, int n) {
  check_param(r_inf, n, "lp_linf parameter");
  BaseIndexSet set;
  set.strategy = SelectionStrategy::LpLinf;
  set.n = n;
  set.param = r_inf;
  for (int i = 0; i < r_inf; ++i) {
    for (int j = 0; j < r_inf; ++j) set.indices.push_back({i, j});
  }
  std::sort(set.indices.begin(), set.indices.end(), diagonal_less);
  return set;
}

void lhe_profile_step(EnergyProfile& profile, const Matrix& g_y, const WhtPlan& plan) {
  if (plan.n != profile.n) throw ShapeError("lhe_profile_step: plan order does not match profile");
  const Matrix coeffs = project_all(g_y, plan);  // padded_len x channels
  for (int i = 0; i < profile.n; ++i) {
    for (int j = 0; j < profile.n; ++j) {
      profile.energy(i, j) += coeffs.row(i * profile.n + j).squaredNorm();
    }
  }
  ++profile.steps_seen;
}

BaseIndexSet lhe_select(const EnergyProfile& profile, int r) {
  if (profile.steps_seen < 1) throw ConfigError("lhe_select: profile has no observations");
  if (r < 1 || r > profile.n * profile.n) {
    throw ConfigError("lhe_select: rank outside base grid");
  }
  std::vector<BaseIndex> all;
  all.reserve(static_cast<std::size_t>(profile.n) * profile.n);
  for (int i = 0; i < profile.n; ++i)
    for (int j = 0; j < profile.n; ++j) all.push_back({i, j});
  std::stable_sort(all.begin(), all.end(), [&](const BaseIndex& a, const BaseIndex& b) {
    const double ea = profile.energy(a.i, a.j);
    const double eb = profile.energy(b.i, b.j);
    if (ea != eb) return ea > eb;
    return diagonal_less(a, b);
  });
  BaseIndexSet set;
  set.strategy = SelectionStrategy::Lhe;
  set.n = profile.n;
  set.param = r;
  set.indices.assign(all.begin(), all.begin() + r);
  return set;
}

}  // namespace lbpwht
