#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "gve/adjacency.hpp"
#include "gve/config.hpp"
#include "gve/evalkit.hpp"
#include "gve/paramset.hpp"
#include "gve/trainer.hpp"

namespace gve::cli {

// Uniform random poses in the training houses; the co-occurrence source
// that stands in for an external image corpus.
std::vector<kg::ViewSample> harvest_views(const kg::ObjectVocabulary& vocab,
                                          const env::EnvConfig& env_cfg,
                                          std::uint64_t world_seed, int views_per_house);

// Harvest + threshold + (for the random-graph ablation) edge scrambling.
kg::AdjacencyTensor build_training_graph(const RunConfig& cfg,
                                         const kg::ObjectVocabulary& vocab);

// Full training run into out_dir: graph.json, config.resolved, progress.csv,
// checkpoints. Returns the final parameters.
diff::ParamSet run_training(const RunConfig& cfg, const std::string& out_dir,
                            std::atomic<bool>* stop = nullptr,
                            const std::string& resume_dir = "");

struct EvalOptions {
  std::string split = "test";
  int episodes = 200;
  std::uint64_t seed = 7;
  bool adapt = false;
  bool random_policy = false;
};

// Fixed episode schedule over the split houses; one record per episode with
// the BFS-optimal length attached.
std::vector<eval::EpisodeRecord> run_evaluation(const RunConfig& cfg,
                                                const kg::ObjectVocabulary& vocab,
                                                const kg::AdjacencyTensor* adj,
                                                const diff::ParamSet* params,
                                                const EvalOptions& opts);

// Evaluate a finished run directory (config.resolved + checkpoint/ +
// graph.json); writes records/metrics/value-error files into it and returns
// the records. adapt_mode: "auto" | "on" | "off".
std::vector<eval::EpisodeRecord> evaluate_run_dir(const std::string& run_dir,
                                                  const std::string& split, int episodes,
                                                  const std::string& adapt_mode,
                                                  std::optional<std::uint64_t> seed,
                                                  bool random_policy);

// Deterministic SVG: one mean line plus a +-std band per curve.
std::string value_error_svg(
    const std::vector<std::pair<std::string, eval::ValueErrorCurve>>& curves);

std::string inspect_graph_report(const kg::AdjacencyTensor& adj,
                                 const kg::ObjectVocabulary& vocab, int top_k);

}  // namespace gve::cli
