#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gve/agent.hpp"
#include "gve/gridhouse.hpp"
#include "gve/paramset.hpp"

namespace gve::train {

struct A3CConfig {
  double gamma = 0.99;
  double entropy_weight = 0.01;
  double value_weight = 0.5;
  double lr = 7e-4;
  double clip = 10.0;
  int segment_len = 50;
  int workers = 4;
  long episodes = 50000;
  long checkpoint_every = 10000;
};

struct MAMLConfig {
  double inner_lr = 1e-2;   // alpha, inner SGD
  double outer_lr = 7e-4;   // beta1 = beta2, outer Adam through the store
  int interval = 6;         // steps between inner updates
  int max_inner = 4;        // inner updates per episode
  double inner_clip = 1.0;  // global-norm clip on the adaptation gradient
  double fd_eps = 1e-3;     // finite-difference scale for the phi gradient
};

struct StepRecord {
  env::Observation obs;  // observation the action was taken from
  int action = 0;
  double reward = 0.0;
  diff::Tensor logpi;    // {1} log pi(a_t | x_t)
  diff::Tensor entropy;  // {1} H_t
  diff::Tensor value;    // {1} V(x_t)
  bool done = false;
};

struct TrajectoryBuffer {
  std::vector<StepRecord> steps;
  double bootstrap = 0.0;  // V after the last step; 0 when terminal

  std::vector<double> rewards() const;
  std::vector<double> values() const;
};

// G_t = r_t + gamma G_{t+1}, seeded with the bootstrap after the last step.
std::vector<double> compute_returns(const std::vector<double>& rewards, double gamma,
                                    double bootstrap);

struct Losses {
  diff::Tensor policy;  // sum_t [ -log pi * A_t  - beta_H H_t ]
  diff::Tensor value;   // sum_t 1/2 (V_t - G_t)^2
};

// Advantages use the one-step TD form r_t + gamma V(x_{t+1}) - V(x_t) with
// detached values; entropy enters as a bonus (larger entropy lowers the
// policy loss).
Losses a3c_losses(const TrajectoryBuffer& buf, const std::vector<double>& returns,
                  double gamma, double entropy_weight);

// Canonical parameters plus optimizer state; snapshots are consistent
// copies and applies are serialized under one lock.
class SharedParamStore {
 public:
  SharedParamStore(diff::ParamSet initial, double lr, double clip);

  diff::ParamSet snapshot() const;
  // Global-norm clip, then Adam. lr_overrides maps name prefixes to
  // partition-specific learning rates (the adapt.* group under beta2).
  void apply(diff::GradMap grads,
             const std::map<std::string, double>& lr_overrides = {});

  long next_episode() { return episode_counter_.fetch_add(1); }
  long episodes_started() const { return episode_counter_.load(); }
  void set_episode_counter(long v) { episode_counter_.store(v); }
  long applies() const;

  void save(const std::string& dir, const std::string& variant) const;
  void load_state(const diff::ParamSet& params, const diff::AdamState& adam, long episode);

 private:
  mutable std::mutex mu_;
  diff::ParamSet params_;
  diff::AdamState adam_;
  double lr_;
  double clip_;
  std::atomic<long> episode_counter_{0};
  long applies_ = 0;
};

// Pure inner update: SGD on the theta_total slice only, original retained.
diff::ParamSet maml_inner_update(const diff::ParamSet& params,
                                 const diff::GradMap& adapt_grads, double alpha);

// Literal synchronous outer rule: theta' = theta_i - beta1 * g,
// phi' = phi - beta2 * g_phi. The asynchronous trainer instead pushes the
// same gradients through the store optimizer.
std::pair<diff::ParamSet, diff::ParamSet> maml_outer_update(
    const diff::ParamSet& theta_i, const diff::GradMap& policy_grads, double beta1,
    const diff::ParamSet& phi, const diff::GradMap& phi_grads, double beta2);

// Filter a gradient map to theta_total (or any predicate).
diff::GradMap filter_grads(const diff::GradMap& grads, bool (*keep)(const std::string&));

struct CsvLogger {
  explicit CsvLogger(const std::string& path, const std::string& header);
  void append(const std::string& row);

 private:
  std::mutex mu_;
  std::string path_;
};

struct TrainContext {
  const kg::ObjectVocabulary* vocab = nullptr;
  const kg::AdjacencyTensor* adj = nullptr;  // null for graph-free variants
  agent::AgentConfig agent_cfg;
  env::EnvConfig env_cfg;
  A3CConfig a3c;
  MAMLConfig maml;
  std::uint64_t run_seed = 1;
  std::uint64_t world_seed = 1000;
  // Parameters whose names start with one of these are zeroed at init and
  // receive zero gradients; the reduction tests freeze critic.Wq this way.
  std::vector<std::string> freeze_zero;
};

// One worker: snapshot, roll one training episode (inner-adapting when the
// variant meta-learns), backward, apply to the store; repeat until the
// episode budget or the stop flag.
void worker_loop(int worker_id, const TrainContext& ctx, SharedParamStore& store,
                 std::atomic<bool>& stop, CsvLogger* progress);

// Spawn workers, checkpoint periodically, join; returns final parameters.
// resume_dir, when set, seeds parameters, optimizer state and the episode
// counter from an existing checkpoint (variant must match).
diff::ParamSet train_run(const TrainContext& ctx, const std::string& out_dir,
                         std::atomic<bool>* external_stop = nullptr,
                         const std::string& resume_dir = "");

// Deterministic training schedule: room round-robin over the train houses.
env::EpisodeSpec training_episode_spec(long episode_index, const TrainContext& ctx,
                                       const env::HouseLayout** layout_out,
                                       std::map<std::uint64_t, env::HouseLayout>& cache);

// Test-time adaptation trace: inner updates every `interval` steps (at most
// max_inner), weights reset to the checkpoint at episode start. Returns the
// rollout below.
struct RolloutResult {
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  bool success = false;
  int steps = 0;
};

RolloutResult rollout_episode(agent::PolicyNet& net, const diff::ParamSet& params,
                              const env::HouseLayout& layout, const env::EpisodeSpec& spec,
                              const env::EnvConfig& env_cfg, std::uint64_t sample_seed,
                              bool adapt, const MAMLConfig& maml);

RolloutResult rollout_random(const env::HouseLayout& layout, const env::EpisodeSpec& spec,
                             const kg::ObjectVocabulary& vocab, const env::EnvConfig& env_cfg,
                             std::uint64_t sample_seed);

}  // namespace gve::train
