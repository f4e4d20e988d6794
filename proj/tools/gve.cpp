#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "gve/runner.hpp"

namespace {

namespace fs = std::filesystem;
using gve::cli::ConfigError;
using gve::cli::RunConfig;

std::atomic<bool> g_interrupted{false};

void handle_sigint(int) { g_interrupted.store(true); }

// Relative output paths land under GVE_OUTPUT_ROOT when it is set.
std::string resolve_out(const std::string& path) {
  const char* root = std::getenv("GVE_OUTPUT_ROOT");
  if (!root || !*root || path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

RunConfig make_config(const std::string& config_file,
                      const std::vector<std::string>& overrides) {
  RunConfig cfg = RunConfig::defaults();
  if (!config_file.empty()) cfg.load_file(config_file);
  for (const auto& kv : overrides) cfg.apply_override(kv);
  return cfg;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

int cmd_train(const std::string& config_file, const std::vector<std::string>& overrides,
              const std::string& out, const std::string& resume) {
  RunConfig cfg = make_config(config_file, overrides);
  const std::string out_dir = resolve_out(out);
  std::signal(SIGINT, handle_sigint);
  gve::cli::run_training(cfg, out_dir, &g_interrupted, resume);
  if (g_interrupted.load())
    std::cout << "interrupted; checkpoint flushed to " << out_dir << "/checkpoint\n";
  else
    std::cout << "trained " << cfg.str("train.episodes") << " episodes into " << out_dir
              << "\n";
  return 0;
}

int cmd_evaluate(const std::string& run_dir, const std::string& split, int episodes,
                 const std::string& adapt, long seed, bool random_policy) {
  std::optional<std::uint64_t> seed_opt;
  if (seed >= 0) seed_opt = static_cast<std::uint64_t>(seed);
  const auto records = gve::cli::evaluate_run_dir(resolve_out(run_dir), split, episodes,
                                                  adapt, seed_opt, random_policy);
  const auto m = gve::eval::compute_metrics(records);
  std::cout << "episodes=" << m.episodes << " SR=" << fmt(m.sr) << " SPL=" << fmt(m.spl);
  if (m.sr_gt5) std::cout << " SR>5=" << fmt(*m.sr_gt5) << " SPL>5=" << fmt(*m.spl_gt5);
  std::cout << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& labels_csv,
             const std::string& out) {
  std::vector<std::string> labels = split_csv(labels_csv);
  std::vector<std::pair<std::string, gve::eval::ValueErrorCurve>> curves;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const std::string label =
        i < labels.size() ? labels[i] : fs::path(inputs[i]).stem().string();
    curves.emplace_back(label, gve::eval::read_value_error_csv(inputs[i]));
  }
  const std::string svg = gve::cli::value_error_svg(curves);
  const std::string out_path = resolve_out(out);
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  f << svg;
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_ablation(const std::string& config_file, const std::vector<std::string>& overrides,
                 const std::string& out, const std::string& variants_csv,
                 const std::string& seeds_csv) {
  const std::string out_dir = resolve_out(out);
  fs::create_directories(out_dir);
  std::signal(SIGINT, handle_sigint);

  const auto variants = split_csv(variants_csv);
  std::vector<long> seeds;
  for (const auto& s : split_csv(seeds_csv)) seeds.push_back(std::stol(s));
  if (variants.empty() || seeds.empty())
    throw ConfigError("ablation needs at least one variant and one seed");

  std::ofstream table(out_dir + "/ablation.csv");
  table << "variant,SPL,SR,SPL_gt5,SR_gt5\n";

  for (const auto& variant : variants) {
    double spl = 0, sr = 0, spl5 = 0, sr5 = 0;
    int n5 = 0;
    for (long seed : seeds) {
      RunConfig cfg = make_config(config_file, overrides);
      cfg.set("agent.variant", variant);
      cfg.set("run.seed", std::to_string(seed));
      const std::string run_dir = out_dir + "/" + variant + "-s" + std::to_string(seed);
      gve::cli::run_training(cfg, run_dir, &g_interrupted);
      if (g_interrupted.load()) return 0;
      const auto records = gve::cli::evaluate_run_dir(run_dir, "test", -1, "auto",
                                                      std::nullopt, false);
      const auto m = gve::eval::compute_metrics(records);
      spl += m.spl;
      sr += m.sr;
      if (m.spl_gt5) {
        spl5 += *m.spl_gt5;
        sr5 += *m.sr_gt5;
        ++n5;
      }
      std::cout << variant << " seed " << seed << ": SR=" << fmt(m.sr)
                << " SPL=" << fmt(m.spl) << "\n";
    }
    const double k = static_cast<double>(seeds.size());
    table << variant << "," << fmt(spl / k) << "," << fmt(sr / k) << ","
          << (n5 ? fmt(spl5 / n5) : "") << "," << (n5 ? fmt(sr5 / n5) : "") << "\n";
    table.flush();
  }
  std::cout << "wrote " << out_dir << "/ablation.csv\n";
  return 0;
}

int cmd_inspect_graph(const std::string& graph_file, int top_k) {
  const auto vocab = gve::kg::make_toy_vocabulary();
  const auto adj = gve::kg::load_adjacency(graph_file, vocab);
  std::cout << gve::cli::inspect_graph_report(adj, vocab, top_k);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-based value estimation for grid-house object-goal navigation"};
  app.require_subcommand(1);

  std::string config_file, out_dir = "runs/run", resume, run_dir;
  std::vector<std::string> overrides;
  std::string split = "test", adapt = "auto";
  int episodes = -1;
  long eval_seed = -1;
  bool random_policy = false;
  std::vector<std::string> plot_inputs;
  std::string plot_labels, plot_out = "value_error.svg";
  std::string variants = "A3C,GVE_MAML", seeds = "1,2,3";
  std::string graph_file;
  int top_k = 5;

  auto* train = app.add_subcommand("train", "train one agent variant");
  train->add_option("--config", config_file, "key=value config file");
  train->add_option("--set", overrides, "override config entries (key=value)");
  train->add_option("--out", out_dir, "output run directory");
  train->add_option("--resume", resume, "checkpoint directory to resume from");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained run directory");
  evaluate->add_option("--run", run_dir, "run directory (config.resolved + checkpoint)")
      ->required();
  evaluate->add_option("--split", split, "train|val|test");
  evaluate->add_option("--episodes", episodes, "episode count (default from config)");
  evaluate->add_option("--adapt", adapt, "test-time adaptation: auto|on|off");
  evaluate->add_option("--seed", eval_seed, "evaluation seed (default from config)");
  evaluate->add_flag("--random", random_policy, "evaluate the uniform-random policy");

  auto* plot = app.add_subcommand("plot", "plot value-error curves as SVG");
  plot->add_option("inputs", plot_inputs, "value_error.csv files")->required();
  plot->add_option("--labels", plot_labels, "comma-separated legend labels");
  plot->add_option("--out", plot_out, "output .svg path");

  auto* ablation = app.add_subcommand("ablation", "train/evaluate a variant grid");
  ablation->add_option("--config", config_file, "key=value config file");
  ablation->add_option("--set", overrides, "override config entries (key=value)");
  ablation->add_option("--out", out_dir, "output directory")->required();
  ablation->add_option("--variants", variants, "comma-separated variant list");
  ablation->add_option("--seeds", seeds, "comma-separated run seeds");

  auto* inspect = app.add_subcommand("inspect-graph", "print the strongest edges per object");
  inspect->add_option("--graph", graph_file, "graph.json path")->required();
  inspect->add_option("--top", top_k, "edges per object");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_file, overrides, out_dir, resume);
    if (evaluate->parsed())
      return cmd_evaluate(run_dir, split, episodes, adapt, eval_seed, random_policy);
    if (plot->parsed()) return cmd_plot(plot_inputs, plot_labels, plot_out);
    if (ablation->parsed())
      return cmd_ablation(config_file, overrides, out_dir, variants, seeds);
    if (inspect->parsed()) return cmd_inspect_graph(graph_file, top_k);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
