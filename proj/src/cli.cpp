#include "lbpwht/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lbpwht/base_selection.hpp"
#include "lbpwht/dataset.hpp"
#include "lbpwht/errors.hpp"
#include "lbpwht/flops.hpp"
#include "lbpwht/linear_backprop.hpp"
#include "lbpwht/rng.hpp"
#include "lbpwht/tensor_io.hpp"
#include "lbpwht/train.hpp"
#include "lbpwht/train_config.hpp"
#include "lbpwht/wht.hpp"

namespace lbpwht::cli {

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open output file " + path);
  return f;
}

// ---------------------------------------------------------------- selection

struct SelectFlags {
  std::string strategy = "lp_l1";
  int param = 0;
  int rank = 0;
  std::vector<std::string> inputs;  // lhe profiling tensors
  std::string bases_file;           // pre-computed selection JSON
};

BaseIndexSet resolve_selection(const SelectFlags& flags, const WhtPlan& plan) {
  if (!flags.bases_file.empty()) {
    std::ifstream f(flags.bases_file);
    if (!f) throw ConfigError("cannot open base set " + flags.bases_file);
    std::ostringstream buf;
    buf << f.rdbuf();
    BaseIndexSet set = BaseIndexSet::from_json(buf.str());
    if (set.n != plan.n) throw ConfigError("base set order does not match transform order");
    return set;
  }
  if (flags.strategy == "lp_l1") {
    if (flags.param < 1) throw ConfigError("lp_l1 requires --param >= 1");
    return lp_l1_select(flags.param, plan.n);
  }
  if (flags.strategy == "lp_linf") {
    if (flags.param < 1) throw ConfigError("lp_linf requires --param >= 1");
    return lp_linf_select(flags.param, plan.n);
  }
  if (flags.strategy == "full") {
    BaseIndexSet set = lp_linf_select(plan.n, plan.n);
    return set;
  }
  if (flags.strategy == "lhe") {
    if (flags.rank < 1) throw ConfigError("lhe requires --rank >= 1");
    if (flags.inputs.empty()) throw ConfigError("lhe requires at least one --input tensor");
    EnergyProfile profile(plan.n);
    for (const std::string& path : flags.inputs) {
      const Matrix g = load_tensor(path);
      if (g.rows() != plan.signal_len) {
        throw ConfigError("profiling tensor " + path + " row count does not match --len");
      }
      lhe_profile_step(profile, g, plan);
    }
    return lhe_select(profile, flags.rank);
  }
  throw ConfigError("unknown strategy " + flags.strategy);
}

// ------------------------------------------------------- random test inputs

// Token maps with a smoothly decaying 2D spectrum: coefficient (i, j) drawn
// N(0, exp(-0.6 (i+j))^2), synthesized through the full base set. This is the
// gradient profile low-pass selection is designed for; "white" draws plain
// N(0, 1) entries instead.
Matrix random_map(Index rows, Index cols, const WhtPlan& plan, Rng& rng, bool lowfreq) {
  if (!lowfreq) return random_normal_matrix(rows, cols, rng);
  std::vector<BaseIndex> all;
  all.reserve(static_cast<std::size_t>(plan.padded_len));
  for (int i = 0; i < plan.n; ++i)
    for (int j = 0; j < plan.n; ++j) all.push_back({i, j});
  Matrix coeffs(plan.padded_len, cols);
  for (int i = 0; i < plan.n; ++i) {
    const double row_scale = std::exp(-0.6 * i);
    for (int j = 0; j < plan.n; ++j) {
      const double scale = row_scale * std::exp(-0.6 * j);
      for (Index c = 0; c < cols; ++c) coeffs(i * plan.n + j, c) = scale * rng.normal();
    }
  }
  return reverse_project(coeffs, all, plan);
}

// ------------------------------------------------------------- subcommands

int cmd_flops(std::int64_t cx, std::int64_t cy, std::int64_t len, std::int64_t rank,
              bool as_json, std::ostream& out) {
  const FlopReport rep = backward_flop_report(cx, cy, len, rank);
  if (as_json) {
    out << rep.to_json() << '\n';
    return 0;
  }
  char line[96];
  const auto row = [&](const char* name, std::int64_t v) {
    std::snprintf(line, sizeof(line), "%-20s %14lld\n", name, static_cast<long long>(v));
    out << line;
  };
  row("vanilla backward", rep.vanilla_bp);
  row("projection", rep.projection);
  row("low-rank matmul", rep.lowrank_mm);
  row("reverse projection", rep.reverse_projection);
  row("total low-rank", rep.total_lbp);
  row("overhead", rep.overhead);
  std::snprintf(line, sizeof(line), "%-20s %14.3fx\n", "speedup", rep.speedup);
  out << line;
  return 0;
}

int cmd_bases(int order, const std::string& json_path, std::ostream& out) {
  const WhtPlan plan = WhtPlan::with_order(order, static_cast<Index>(order) * order);
  const std::vector<FlatBase> bases = build_flat_bases(plan);
  if (!json_path.empty()) {
    nlohmann::json j;
    j["n"] = plan.n;
    nlohmann::json arr = nlohmann::json::array();
    for (const FlatBase& b : bases) {
      nlohmann::json e;
      e["i"] = b.index.i;
      e["j"] = b.index.j;
      e["values"] = std::vector<int>(b.values.data(), b.values.data() + b.values.size());
      arr.push_back(std::move(e));
    }
    j["bases"] = std::move(arr);
    open_output(json_path) << j.dump(2) << '\n';
    out << "wrote " << bases.size() << " bases to " << json_path << '\n';
    return 0;
  }
  for (const FlatBase& b : bases) {
    out << "B(" << b.index.i << "," << b.index.j << ")\n";
    for (int a = 0; a < plan.n; ++a) {
      for (int c = 0; c < plan.n; ++c) out << (b.values[a * plan.n + c] > 0 ? '+' : '-');
      out << '\n';
    }
    out << '\n';
  }
  return 0;
}

int cmd_select(int order, const SelectFlags& flags, Index len, const std::string& out_path,
               std::ostream& out) {
  const Index signal = len > 0 ? len : static_cast<Index>(order) * order;
  const WhtPlan plan = WhtPlan::with_order(order, signal);
  const BaseIndexSet set = resolve_selection(flags, plan);
  if (out_path.empty()) {
    out << set.to_json() << '\n';
  } else {
    open_output(out_path) << set.to_json() << '\n';
    out << "wrote rank-" << set.rank() << " selection to " << out_path << '\n';
  }
  return 0;
}

int cmd_transform(const std::string& input, const std::string& output, int order,
                  const SelectFlags& flags, bool inverse, Index len, std::ostream& out) {
  const Matrix x = load_tensor(input);
  if (inverse) {
    if (len < 1) throw ConfigError("--inverse requires --len (original signal length)");
    const WhtPlan plan = order > 0 ? WhtPlan::with_order(order, len) : WhtPlan::for_signal(len);
    const BaseIndexSet set = resolve_selection(flags, plan);
    if (x.rows() != set.rank()) {
      throw ConfigError("coefficient rows do not match the selection rank");
    }
    save_tensor(reverse_project(x, set.indices, plan), output);
    out << "reverse-projected " << set.rank() << " coefficients to " << len << " rows\n";
    return 0;
  }
  const WhtPlan plan =
      order > 0 ? WhtPlan::with_order(order, x.rows()) : WhtPlan::for_signal(x.rows());
  const BaseIndexSet set = resolve_selection(flags, plan);
  save_tensor(project(x, set.indices, plan), output);
  out << "projected " << x.rows() << " rows onto " << set.rank() << " bases\n";
  return 0;
}

int cmd_spectrum(const std::string& input, int order, const std::string& out_path,
                 std::ostream& out) {
  const Matrix x = load_tensor(input);
  WhtPlan plan;
  try {
    plan = order > 0 ? WhtPlan::with_order(order, x.rows()) : WhtPlan::for_signal(x.rows());
  } catch (const ConfigError&) {
    throw ConfigError("--order too small for the input tensor");
  }
  const Matrix coeffs = project_all(x, plan);
  std::ofstream file;
  std::ostream* dst = &out;
  if (!out_path.empty()) {
    file = open_output(out_path);
    dst = &file;
  }
  *dst << "i,j,energy\n";
  for (int i = 0; i < plan.n; ++i) {
    for (int j = 0; j < plan.n; ++j) {
      *dst << i << ',' << j << ','
           << format_double(coeffs.row(i * plan.n + j).squaredNorm()) << '\n';
    }
  }
  if (!out_path.empty()) out << "wrote " << plan.n << "x" << plan.n << " spectrum to "
                             << out_path << '\n';
  return 0;
}

struct SweepPoint {
  int param = 0;
  int rank = 0;
  double err_gx = 0.0;
  double err_gw = 0.0;
  double mflops = 0.0;
};

int cmd_grad_error(Index cx, Index cy, Index len, int order, const std::string& strategy,
                   const std::vector<int>& sweep, std::uint64_t seed, int instances,
                   const std::string& profile_kind, const std::string& out_path,
                   std::ostream& out) {
  if (cx < 1 || cy < 1 || len < 1) throw ConfigError("geometry flags must be positive");
  if (instances < 1) throw ConfigError("--instances must be >= 1");
  if (sweep.empty()) throw ConfigError("--sweep must name at least one value");
  const bool lowfreq = profile_kind == "lowfreq";
  if (!lowfreq && profile_kind != "white") {
    throw ConfigError("--profile must be lowfreq or white");
  }
  const WhtPlan plan = order > 0 ? WhtPlan::with_order(order, len) : WhtPlan::for_signal(len);

  // Seeded instances, shared across the whole sweep.
  struct Instance {
    LinearLayerState layer;
    Matrix g_y;
    Gradients exact;
  };
  std::vector<Instance> set;
  Rng root(seed);
  EnergyProfile profile(plan.n);
  for (int k = 0; k < instances; ++k) {
    Rng rng = root.child(static_cast<std::uint64_t>(k));
    Matrix w = random_normal_matrix(cy, cx, rng, 1.0 / std::sqrt(double(cx)));
    LinearLayerState layer(std::move(w), ExactMode{});
    const Matrix x = random_map(len, cx, plan, rng, lowfreq);
    linear_forward(layer, x);
    Matrix g_y = random_map(len, cy, plan, rng, lowfreq);
    lhe_profile_step(profile, g_y, plan);
    Gradients exact = exact_backward(layer, g_y);
    set.push_back({std::move(layer), std::move(g_y), std::move(exact)});
  }

  std::vector<SweepPoint> points;
  for (int param : sweep) {
    BaseIndexSet bases;
    if (strategy == "lp_l1") bases = lp_l1_select(param, plan.n);
    else if (strategy == "lp_linf") bases = lp_linf_select(param, plan.n);
    else if (strategy == "lhe") bases = lhe_select(profile, param);
    else throw ConfigError("unknown strategy " + strategy);

    SweepPoint p;
    p.param = param;
    p.rank = bases.rank();
    for (Instance& inst : set) {
      inst.layer.mode() = LbpWhtMode{bases, plan};
      const Gradients approx = lbp_wht_backward(inst.layer, inst.g_y);
      const GradientError err = gradient_error(inst.exact, approx);
      p.err_gx += err.err_gx / instances;
      p.err_gw += err.err_gw / instances;
    }
    p.mflops =
        static_cast<double>(backward_flop_report(cx, cy, len, bases.rank()).total_lbp) / 1e6;
    points.push_back(p);
  }

  std::ofstream file;
  std::ostream* dst = &out;
  if (!out_path.empty()) {
    file = open_output(out_path);
    dst = &file;
  }
  *dst << "rank,err_gx,err_gw,total_mflops\n";
  for (const SweepPoint& p : points) {
    *dst << p.rank << ',' << format_double(p.err_gx) << ',' << format_double(p.err_gw) << ','
         << format_double(p.mflops) << '\n';
  }
  if (!out_path.empty()) out << "wrote " << points.size() << " sweep rows to " << out_path
                             << '\n';
  return 0;
}

int cmd_train(const std::string& config_path, std::string out_prefix, std::ostream& out) {
  const TrainConfig config = TrainConfig::from_file(config_path);
  if (out_prefix.empty()) out_prefix = std::filesystem::path(config_path).stem().string();
  const auto [train_data, eval_data] = make_synthetic_dataset(config.dataset);
  Model model = build_model(config);
  const TrainLog log = train(model, config, train_data, eval_data);

  open_output(out_prefix + ".csv") << [&] {
    std::ostringstream csv;
    log.write_csv(csv);
    return csv.str();
  }();
  open_output(out_prefix + ".json") << log.to_json() << '\n';

  char line[128];
  std::snprintf(line, sizeof(line),
                "final eval accuracy %.4f, backward compute %.2f MFLOPs (%d epochs)\n",
                log.final_eval_acc(), log.total_mflops(), config.epochs);
  out << line;
  out << "wrote " << out_prefix << ".csv and " << out_prefix << ".json\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<int>& params, bool include_exact,
              int lora_rank, const std::string& out_path, const std::string& marginal_path,
              std::ostream& out) {
  const TrainConfig base = TrainConfig::from_file(config_path);
  if (params.empty() && !include_exact && lora_rank <= 0) {
    throw ConfigError("sweep: nothing to run (use --params/--include-exact/--include-lora)");
  }
  const auto [train_data, eval_data] = make_synthetic_dataset(base.dataset);

  struct Row {
    std::string label;
    int rank = 0;
    double acc = 0.0;
    double mflops = 0.0;
  };
  std::vector<Row> rows;

  const auto run_variant = [&](const TrainConfig& config, const std::string& label, int rank) {
    Model model = build_model(config);
    const TrainLog log = train(model, config, train_data, eval_data);
    rows.push_back({label, rank, log.final_eval_acc(), log.total_mflops()});
    out << label << ": eval acc " << format_double(log.final_eval_acc()) << ", "
        << format_double(log.total_mflops()) << " MFLOPs\n";
  };

  if (include_exact) {
    TrainConfig config = base;
    for (LayerModeConfig& m : config.bp_modes) m = LayerModeConfig{};  // exact everywhere
    run_variant(config, "exact", 0);
  }
  if (lora_rank > 0) {
    TrainConfig config = base;
    for (LayerModeConfig& m : config.bp_modes) {
      m = LayerModeConfig{};
      m.kind = LayerModeConfig::Kind::Lora;
      m.lora_rank = lora_rank;
    }
    run_variant(config, "lora-" + std::to_string(lora_rank), lora_rank);
  }
  for (int p : params) {
    TrainConfig config = base;
    int rank = 0;
    std::string label;
    for (LayerModeConfig& m : config.bp_modes) {
      if (m.kind != LayerModeConfig::Kind::LbpWht) continue;
      m.param = p;
      if (m.strategy == SelectionStrategy::LpL1) {
        rank = p * (p + 1) / 2;
        label = "lp_l1-" + std::to_string(p);
      } else if (m.strategy == SelectionStrategy::LpLinf) {
        rank = p * p;
        label = "lp_linf-" + std::to_string(p);
      } else {
        rank = p;
        label = "lhe-" + std::to_string(p);
      }
    }
    if (label.empty()) throw ConfigError("sweep: config has no lbp_wht layers to sweep");
    run_variant(config, label, rank);
  }

  std::ofstream file;
  std::ostream* dst = &out;
  if (!out_path.empty()) {
    file = open_output(out_path);
    dst = &file;
  }
  *dst << "label,rank,final_eval_acc,cum_mflops\n";
  for (const Row& r : rows) {
    *dst << r.label << ',' << r.rank << ',' << format_double(r.acc) << ','
         << format_double(r.mflops) << '\n';
  }

  if (!marginal_path.empty()) {
    // Slopes across the swept low-rank variants only, in run order.
    std::vector<std::pair<double, double>> pts;
    std::vector<std::string> labels;
    for (const Row& r : rows) {
      if (r.label == "exact" || r.label.rfind("lora", 0) == 0) continue;
      pts.push_back({r.mflops, r.acc});
      labels.push_back(r.label);
    }
    const std::vector<double> slopes = marginal_accuracy(pts);
    std::ofstream mf = open_output(marginal_path);
    mf << "from,to,slope_acc_per_mflop\n";
    for (std::size_t k = 0; k < slopes.size(); ++k) {
      mf << labels[k] << ',' << labels[k + 1] << ',' << format_double(slopes[k]) << '\n';
    }
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank backpropagation for linear layers via Walsh-Hadamard projections"};
  app.require_subcommand(1);

  // flops
  auto* flops = app.add_subcommand("flops", "Analytical backward-pass FLOP report");
  std::int64_t f_cx = 0, f_cy = 0, f_len = 0, f_rank = 0;
  bool f_json = false;
  flops->add_option("--cx", f_cx, "input channels")->required();
  flops->add_option("--cy", f_cy, "output channels")->required();
  flops->add_option("--len", f_len, "token count")->required();
  flops->add_option("--rank", f_rank, "projection rank")->required();
  flops->add_flag("--json", f_json, "emit JSON");

  // bases
  auto* bases = app.add_subcommand("bases", "Show or dump the 2D transform bases");
  int b_order = 0;
  std::string b_json;
  bases->add_option("--order", b_order, "transform order (power of two)")->required();
  bases->add_option("--json", b_json, "write bases to this JSON file");

  // select
  auto* select = app.add_subcommand("select", "Produce a base-selection JSON");
  int s_order = 0;
  Index s_len = 0;
  SelectFlags s_flags;
  std::string s_out;
  select->add_option("--order", s_order, "transform order")->required();
  select->add_option("--strategy", s_flags.strategy, "lp_l1 | lp_linf | lhe | full");
  select->add_option("--param", s_flags.param, "low-pass parameter");
  select->add_option("--rank", s_flags.rank, "rank for lhe");
  select->add_option("--input", s_flags.inputs, "profiling tensor (repeatable, lhe)");
  select->add_option("--len", s_len, "signal length of profiling tensors");
  select->add_option("--out", s_out, "output JSON path");

  // transform
  auto* transform = app.add_subcommand("transform", "Project a tensor onto selected bases");
  std::string t_in, t_out;
  int t_order = 0;
  Index t_len = 0;
  bool t_inverse = false;
  SelectFlags t_flags;
  t_flags.strategy = "full";
  transform->add_option("--input", t_in, "input tensor")->required();
  transform->add_option("--out", t_out, "output tensor")->required();
  transform->add_option("--order", t_order, "transform order (default: fit input)");
  transform->add_option("--strategy", t_flags.strategy, "lp_l1 | lp_linf | full");
  transform->add_option("--param", t_flags.param, "low-pass parameter");
  transform->add_option("--bases", t_flags.bases_file, "selection JSON from `select`");
  transform->add_flag("--inverse", t_inverse, "reverse-project coefficients");
  transform->add_option("--len", t_len, "original signal length (--inverse)");

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "Per-base energy of a tensor");
  std::string sp_in, sp_out;
  int sp_order = 0;
  spectrum->add_option("--input", sp_in, "input tensor")->required();
  spectrum->add_option("--order", sp_order, "transform order (default: fit input)");
  spectrum->add_option("--out", sp_out, "output CSV path");

  // grad-error
  auto* graderr = app.add_subcommand("grad-error",
                                     "Gradient approximation error across a rank sweep");
  Index g_cx = 0, g_cy = 0, g_len = 0;
  int g_order = 0, g_instances = 8;
  std::string g_strategy = "lp_l1", g_profile = "lowfreq", g_out;
  std::vector<int> g_sweep;
  std::uint64_t g_seed = 0;
  graderr->add_option("--cx", g_cx, "input channels")->required();
  graderr->add_option("--cy", g_cy, "output channels")->required();
  graderr->add_option("--len", g_len, "token count")->required();
  graderr->add_option("--order", g_order, "transform order (default: fit --len)");
  graderr->add_option("--strategy", g_strategy, "lp_l1 | lp_linf | lhe");
  graderr->add_option("--sweep", g_sweep, "parameter values, e.g. --sweep 1 2 4 8")->required();
  graderr->add_option("--seed", g_seed, "random seed")->required();
  graderr->add_option("--instances", g_instances, "instances per sweep point");
  graderr->add_option("--profile", g_profile, "instance spectrum: lowfreq | white");
  graderr->add_option("--out", g_out, "output CSV path");

  // train
  auto* train_cmd = app.add_subcommand("train", "Run a training configuration");
  std::string tr_config, tr_prefix;
  train_cmd->add_option("--config", tr_config, "config JSON path")->required();
  train_cmd->add_option("--out-prefix", tr_prefix, "artifact path prefix");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Train a config across several ranks");
  std::string sw_config, sw_out, sw_marginal;
  std::vector<int> sw_params;
  bool sw_exact = false;
  int sw_lora = 0;
  sweep->add_option("--config", sw_config, "config JSON path")->required();
  sweep->add_option("--params", sw_params, "selection parameters to sweep");
  sweep->add_flag("--include-exact", sw_exact, "also run exact backpropagation");
  sweep->add_option("--include-lora", sw_lora, "also run a rank-R adapter baseline");
  sweep->add_option("--out", sw_out, "sweep CSV path");
  sweep->add_option("--marginal-out", sw_marginal, "marginal-accuracy CSV path");

  std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 wants reversed args
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (flops->parsed()) return cmd_flops(f_cx, f_cy, f_len, f_rank, f_json, out);
    if (bases->parsed()) return cmd_bases(b_order, b_json, out);
    if (select->parsed()) return cmd_select(s_order, s_flags, s_len, s_out, out);
    if (transform->parsed())
      return cmd_transform(t_in, t_out, t_order, t_flags, t_inverse, t_len, out);
    if (spectrum->parsed()) return cmd_spectrum(sp_in, sp_order, sp_out, out);
    if (graderr->parsed())
      return cmd_grad_error(g_cx, g_cy, g_len, g_order, g_strategy, g_sweep, g_seed, g_instances,
                            g_profile, g_out, out);
    if (train_cmd->parsed()) return cmd_train(tr_config, tr_prefix, out);
    if (sweep->parsed())
      return cmd_sweep(sw_config, sw_params, sw_exact, sw_lora, sw_out, sw_marginal, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

}  // namespace lbpwht::cli
