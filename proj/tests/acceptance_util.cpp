#include "acceptance_util.hpp"

#include <cstdio>
#include <filesystem>

namespace acceptance {

namespace fs = std::filesystem;
using namespace gve;

void Report::check(int criterion, const std::string& label, bool pass,
                   const std::string& detail) {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion,
              label.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) all_pass_ = false;
}

int Report::finish() const {
  std::printf("%s\n", all_pass_ ? "ALL CRITERIA PASSED" : "CRITERIA FAILED");
  return all_pass_ ? 0 : 1;
}

cli::RunConfig variant_config(const std::string& variant, long seed) {
  cli::RunConfig cfg = cli::RunConfig::defaults();
  cfg.set("agent.variant", variant);
  cfg.set("run.seed", std::to_string(seed));
  return cfg;
}

std::string ensure_trained(const cli::RunConfig& cfg, const std::string& root,
                           const std::string& variant, long seed) {
  const std::string dir = root + "/" + variant + "-s" + std::to_string(seed);
  if (fs::exists(dir + "/checkpoint/manifest.json")) {
    const auto loaded = diff::load_checkpoint(dir + "/checkpoint");
    if (loaded.meta.variant == variant &&
        loaded.meta.episode >= cfg.integer("train.episodes"))
      return dir;  // reuse the finished run
    fs::remove_all(dir);
  }
  std::printf("  [training %s seed %ld, %s episodes...]\n", variant.c_str(), seed,
              cfg.str("train.episodes").c_str());
  std::fflush(stdout);
  cli::run_training(cfg, dir);
  return dir;
}

EvalSummary evaluate_dir(const std::string& run_dir, int episodes, bool random_policy) {
  const auto m = eval::compute_metrics(evaluate_records(run_dir, episodes, random_policy));
  return {m.sr, m.spl};
}

std::vector<eval::EpisodeRecord> evaluate_records(const std::string& run_dir, int episodes,
                                                  bool random_policy) {
  return cli::evaluate_run_dir(run_dir, "test", episodes, "auto", std::nullopt,
                               random_policy);
}

}  // namespace acceptance
