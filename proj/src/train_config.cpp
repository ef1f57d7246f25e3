#include "lbpwht/train_config.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lbpwht/errors.hpp"

namespace lbpwht {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

json mode_to_json(const LayerModeConfig& m) {
  json j;
  switch (m.kind) {
    case LayerModeConfig::Kind::Exact:
      j["mode"] = "exact";
      break;
    case LayerModeConfig::Kind::Lora:
      j["mode"] = "lora";
      j["rank"] = m.lora_rank;
      break;
    case LayerModeConfig::Kind::LbpWht:
      j["mode"] = "lbp_wht";
      if (m.strategy == SelectionStrategy::LpL1) {
        j["strategy"] = "lp_l1";
        j["param"] = m.param;
      } else if (m.strategy == SelectionStrategy::LpLinf) {
        j["strategy"] = "lp_linf";
        j["param"] = m.param;
      } else {
        j["strategy"] = "lhe";
        j["rank"] = m.param;
        j["profile_steps"] = m.profile_steps;
      }
      break;
  }
  return j;
}

LayerModeConfig mode_from_json(const json& j) {
  LayerModeConfig m;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "exact") {
    m.kind = LayerModeConfig::Kind::Exact;
  } else if (mode == "lora") {
    m.kind = LayerModeConfig::Kind::Lora;
    m.lora_rank = j.at("rank").get<int>();
    if (m.lora_rank < 1) throw ConfigError("config: lora rank must be >= 1");
  } else if (mode == "lbp_wht") {
    m.kind = LayerModeConfig::Kind::LbpWht;
    const std::string strategy = j.at("strategy").get<std::string>();
    if (strategy == "lp_l1") {
      m.strategy = SelectionStrategy::LpL1;
      m.param = j.at("param").get<int>();
    } else if (strategy == "lp_linf") {
      m.strategy = SelectionStrategy::LpLinf;
      m.param = j.at("param").get<int>();
    } else if (strategy == "lhe") {
      m.strategy = SelectionStrategy::Lhe;
      m.param = j.at("rank").get<int>();
      m.profile_steps = j.value("profile_steps", 8);
      if (m.profile_steps < 1) throw ConfigError("config: profile_steps must be >= 1");
    } else {
      throw ConfigError("config: unknown selection strategy " + strategy);
    }
    if (m.param < 1) throw ConfigError("config: selection parameter must be >= 1");
  } else {
    throw ConfigError("config: unknown backward mode " + mode);
  }
  return m;
}

}  // namespace

std::string TrainConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  json opt;
  if (optimizer.kind == OptimizerKind::Sgd) {
    opt["type"] = "sgd";
    opt["momentum"] = optimizer.momentum;
  } else {
    opt["type"] = "adam";
    opt["beta1"] = optimizer.beta1;
    opt["beta2"] = optimizer.beta2;
    opt["eps"] = optimizer.eps;
  }
  j["optimizer"] = std::move(opt);
  j["frozen_prefix"] = frozen_prefix;
  j["dataset"] = {{"n_samples", dataset.n_samples}, {"tokens", dataset.tokens},
                  {"channels", dataset.channels},   {"classes", dataset.classes},
                  {"seed", dataset.seed},           {"difficulty", dataset.difficulty}};
  json model;
  model["hidden"] = hidden;
  model["activation"] = activation == Activation::Relu ? "relu" : "gelu";
  j["model"] = std::move(model);
  json modes = json::array();
  for (const LayerModeConfig& m : bp_modes) modes.push_back(mode_to_json(m));
  j["bp_modes"] = std::move(modes);
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  TrainConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<Index>();
    c.learning_rate = j.at("learning_rate").get<double>();
    const json& opt = j.at("optimizer");
    const std::string type = opt.at("type").get<std::string>();
    if (type == "sgd") {
      c.optimizer.kind = OptimizerKind::Sgd;
      c.optimizer.momentum = opt.value("momentum", 0.0);
    } else if (type == "adam") {
      c.optimizer.kind = OptimizerKind::Adam;
      c.optimizer.beta1 = opt.value("beta1", 0.9);
      c.optimizer.beta2 = opt.value("beta2", 0.999);
      c.optimizer.eps = opt.value("eps", 1e-8);
    } else {
      throw ConfigError("config: unknown optimizer " + type);
    }
    c.frozen_prefix = j.value("frozen_prefix", 0);
    const json& d = j.at("dataset");
    c.dataset.n_samples = d.at("n_samples").get<Index>();
    c.dataset.tokens = d.at("tokens").get<Index>();
    c.dataset.channels = d.at("channels").get<Index>();
    c.dataset.classes = d.at("classes").get<int>();
    c.dataset.seed = d.at("seed").get<std::uint64_t>();
    c.dataset.difficulty = d.at("difficulty").get<double>();
    const json& model = j.at("model");
    c.hidden = model.at("hidden").get<std::vector<Index>>();
    const std::string act = model.value("activation", "gelu");
    if (act == "relu") c.activation = Activation::Relu;
    else if (act == "gelu") c.activation = Activation::Gelu;
    else throw ConfigError("config: unknown activation " + act);
    const json& modes = j.at("bp_modes");
    if (modes.is_array()) {
      for (const json& m : modes) c.bp_modes.push_back(mode_from_json(m));
    } else {
      // A single object applies to every linear layer.
      for (std::size_t l = 0; l < c.hidden.size() + 1; ++l)
        c.bp_modes.push_back(mode_from_json(modes));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (c.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (c.learning_rate < 0.0) throw ConfigError("config: learning_rate must be >= 0");
  if (c.frozen_prefix < 0) throw ConfigError("config: frozen_prefix must be >= 0");
  if (c.bp_modes.size() != c.hidden.size() + 1) {
    throw ConfigError("config: bp_modes must list one entry per linear layer");
  }
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return from_json(buf.str());
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,train_acc,eval_acc,cum_mflops\n";
  for (const EpochStats& e : epochs) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.train_acc)
        << ',' << format_double(e.eval_acc) << ',' << format_double(e.cum_mflops) << '\n';
  }
}

std::string TrainLog::to_json() const {
  json j;
  json rows = json::array();
  for (const EpochStats& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"train_acc", e.train_acc},
                    {"eval_acc", e.eval_acc},
                    {"cum_mflops", e.cum_mflops}});
  }
  j["per_epoch"] = std::move(rows);
  j["final_eval_acc"] = final_eval_acc();
  j["backward_flops"] = backward_flops;
  j["total_mflops"] = total_mflops();
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

}  // namespace lbpwht
