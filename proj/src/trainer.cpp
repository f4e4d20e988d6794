#include "gve/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "gve/rng.hpp"

namespace gve::train {

using agent::PolicyNet;
using diff::GradMap;
using diff::ParamSet;
using diff::Tensor;

std::vector<double> TrajectoryBuffer::rewards() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.reward);
  return out;
}

std::vector<double> TrajectoryBuffer::values() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.value.item());
  return out;
}

std::vector<double> compute_returns(const std::vector<double>& rewards, double gamma,
                                    double bootstrap) {
  std::vector<double> returns(rewards.size());
  double acc = bootstrap;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    returns[i] = acc;
  }
  return returns;
}

Losses a3c_losses(const TrajectoryBuffer& buf, const std::vector<double>& returns,
                  double gamma, double entropy_weight) {
  if (buf.steps.size() != returns.size())
    throw std::invalid_argument("a3c_losses: buffer holds " +
                                std::to_string(buf.steps.size()) + " steps but " +
                                std::to_string(returns.size()) + " returns");
  const std::vector<double> values = buf.values();
  Tensor policy_loss, value_loss;
  for (size_t t = 0; t < buf.steps.size(); ++t) {
    const StepRecord& s = buf.steps[t];
    // One-step TD advantage on detached values; the bootstrap closes the tail.
    const double v_next = (t + 1 < values.size())
                              ? values[t + 1]
                              : (s.done ? 0.0 : buf.bootstrap);
    const double advantage = s.reward + (s.done ? 0.0 : gamma * v_next) - values[t];

    Tensor pterm = diff::add(diff::scale(s.logpi, -advantage),
                             diff::scale(s.entropy, -entropy_weight));
    policy_loss = policy_loss.defined() ? diff::add(policy_loss, pterm) : pterm;

    Tensor err = diff::sub(s.value, Tensor::scalar(returns[t]));
    Tensor vterm = diff::scale(diff::mul(err, err), 0.5);
    value_loss = value_loss.defined() ? diff::add(value_loss, vterm) : vterm;
  }
  return {policy_loss, value_loss};
}

SharedParamStore::SharedParamStore(ParamSet initial, double lr, double clip)
    : params_(std::move(initial)), lr_(lr), clip_(clip) {}

ParamSet SharedParamStore::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return params_.clone();
}

void SharedParamStore::apply(GradMap grads,
                             const std::map<std::string, double>& lr_overrides) {
  for (const auto& [name, g] : grads)
    for (double x : g)
      if (!std::isfinite(x))
        throw std::logic_error("apply_gradients: non-finite gradient in " + name);

  std::lock_guard<std::mutex> lock(mu_);
  diff::clip_global_norm(grads, clip_);
  if (lr_overrides.empty()) {
    diff::adam_step(params_, grads, adam_, lr_);
  } else {
    GradMap base;
    std::map<std::string, GradMap> groups;
    for (auto& [name, g] : grads) {
      bool grouped = false;
      for (const auto& [prefix, lr] : lr_overrides)
        if (name.rfind(prefix, 0) == 0) {
          groups[prefix][name] = std::move(g);
          grouped = true;
          break;
        }
      if (!grouped) base[name] = std::move(g);
    }
    // One Adam step count per apply: step the base group, then reuse the
    // incremented counter for the overridden groups.
    diff::adam_step(params_, base, adam_, lr_);
    for (auto& [prefix, group] : groups) {
      adam_.step -= 1;
      diff::adam_step(params_, group, adam_, lr_overrides.at(prefix));
    }
  }
  ++applies_;
}

long SharedParamStore::applies() const {
  std::lock_guard<std::mutex> lock(mu_);
  return applies_;
}

void SharedParamStore::save(const std::string& dir, const std::string& variant) const {
  std::lock_guard<std::mutex> lock(mu_);
  diff::CheckpointMeta meta;
  meta.variant = variant;
  meta.episode = episode_counter_.load();
  diff::save_checkpoint(dir, params_, meta, &adam_);
}

void SharedParamStore::load_state(const ParamSet& params, const diff::AdamState& adam,
                                  long episode) {
  std::lock_guard<std::mutex> lock(mu_);
  params_ = params.clone();
  adam_ = adam;
  episode_counter_.store(episode);
}

ParamSet maml_inner_update(const ParamSet& params, const GradMap& adapt_grads,
                           double alpha) {
  GradMap theta_grads;
  for (const auto& [name, g] : adapt_grads)
    if (agent::in_theta_total(name)) theta_grads[name] = g;
  return diff::sgd_step(params, theta_grads, alpha);
}

std::pair<ParamSet, ParamSet> maml_outer_update(const ParamSet& theta_i,
                                                const GradMap& policy_grads, double beta1,
                                                const ParamSet& phi,
                                                const GradMap& phi_grads, double beta2) {
  return {diff::sgd_step(theta_i, policy_grads, beta1),
          diff::sgd_step(phi, phi_grads, beta2)};
}

GradMap filter_grads(const GradMap& grads, bool (*keep)(const std::string&)) {
  GradMap out;
  for (const auto& [name, g] : grads)
    if (keep(name)) out[name] = g;
  return out;
}

CsvLogger::CsvLogger(const std::string& path, const std::string& header) : path_(path) {
  std::ofstream out(path_);
  out << header << "\n";
}

void CsvLogger::append(const std::string& row) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::app);
  out << row << "\n";
}

env::EpisodeSpec training_episode_spec(long episode_index, const TrainContext& ctx,
                                       const env::HouseLayout** layout_out,
                                       std::map<std::uint64_t, env::HouseLayout>& cache) {
  const auto room = static_cast<kg::RoomType>(episode_index % kg::kRoomCount);
  const auto houses = env::split_house_indices("train", ctx.env_cfg);
  const int house_idx =
      houses[static_cast<size_t>((episode_index / kg::kRoomCount) %
                                 static_cast<long>(houses.size()))];
  const std::uint64_t hseed = env::house_seed_for(room, house_idx, ctx.world_seed);
  auto it = cache.find(hseed);
  if (it == cache.end())
    it = cache.emplace(hseed, env::generate_house(hseed, room, *ctx.vocab, ctx.env_cfg)).first;
  *layout_out = &it->second;
  return env::sample_episode(it->second,
                             mix_seed(ctx.run_seed, static_cast<std::uint64_t>(episode_index)),
                             ctx.env_cfg.max_steps_train, "train");
}

namespace {

struct InnerWindow {
  std::vector<env::Observation> obs;
  std::vector<double> h_in, c_in;
  size_t version;  // parameter version in force at the window start
};

// -sum(pi log pi) from the paired softmax/log-softmax outputs; the product
// is exactly zero where a probability underflows, so saturated policies
// keep finite entropies and gradients.
Tensor step_entropy(const agent::StepOutput& out) {
  return diff::scale(diff::sum(diff::mul(out.policy, out.log_policy)), -1.0);
}

void add_scaled_values(ParamSet& params, const GradMap& dir, double factor) {
  for (const auto& [name, d] : dir) {
    if (!params.contains(name)) continue;
    auto& w = params.at(name).values();
    for (size_t i = 0; i < w.size(); ++i) w[i] += factor * d[i];
  }
}

GradMap adapt_grads_for_window(PolicyNet& net, const ParamSet& params,
                               const InnerWindow& window, int lstm_hidden) {
  Tensor h = Tensor::constant({lstm_hidden}, window.h_in);
  Tensor c = Tensor::constant({lstm_hidden}, window.c_in);
  std::vector<Tensor> states, policies;
  for (const auto& obs : window.obs) {
    agent::StepOutput out = net.forward(obs, h, c);
    states.push_back(out.state);
    policies.push_back(out.policy);
    h = out.h;
    c = out.c;
  }
  Tensor loss = agent::adaptation_loss(states, policies, params);
  diff::backward(loss);
  GradMap all = diff::harvest_grads(params);
  diff::zero_grad_graph(loss);
  GradMap out;
  for (auto& [name, g] : all)
    if (agent::is_adapt_param(name)) out[name] = std::move(g);
  return out;
}

struct EpisodeOutcome {
  double total_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_entropy = 0.0;
  int steps = 0;
};

EpisodeOutcome run_training_episode(const TrainContext& ctx, SharedParamStore& store,
                                    const env::HouseLayout& layout,
                                    const env::EpisodeSpec& spec, Rng& action_rng,
                                    PolicyNet& net) {
  const bool maml = agent::uses_maml(ctx.agent_cfg.variant);
  const int hidden = ctx.agent_cfg.lstm_hidden;

  std::deque<ParamSet> versions;
  versions.push_back(store.snapshot());
  net.bind(versions.back());

  env::Episode ep(layout, spec, *ctx.vocab, ctx.env_cfg);
  diff::LstmState hc = net.initial_state();

  TrajectoryBuffer buf;
  std::vector<Tensor> win_states, win_policies;
  std::vector<env::Observation> win_obs;
  std::vector<double> win_h = hc.h.values(), win_c = hc.c.values();
  std::vector<InnerWindow> windows;
  int inner_done = 0;

  while (!ep.done() && static_cast<int>(buf.steps.size()) < ctx.a3c.segment_len) {
    env::Observation obs = ep.observation();
    agent::StepOutput out = net.forward(obs, hc.h, hc.c);
    const int action = action_rng.categorical(out.policy.values().data(), env::kActionCount);
    Tensor logpi = diff::slice(out.log_policy, 0, action, 1);
    Tensor entropy = step_entropy(out);
    env::StepResult res = ep.step(static_cast<env::Action>(action));
    buf.steps.push_back({std::move(obs), action, res.reward, logpi, entropy, out.value,
                         res.done});
    win_obs.push_back(buf.steps.back().obs);
    win_states.push_back(out.state);
    win_policies.push_back(out.policy);
    hc = {out.h, out.c};

    if (static_cast<int>(win_obs.size()) == ctx.maml.interval) {
      if (maml && inner_done < ctx.maml.max_inner && !ep.done()) {
        Tensor l_adapt = agent::adaptation_loss(win_states, win_policies, net.params());
        diff::backward(l_adapt);
        GradMap g;
        for (const auto& v : versions) diff::accumulate_grads(g, v);
        diff::zero_grad_graph(l_adapt);
        diff::clip_global_norm(g, ctx.maml.inner_clip);
        windows.push_back({win_obs, win_h, win_c, versions.size() - 1});
        versions.push_back(maml_inner_update(net.params(), g, ctx.maml.inner_lr));
        net.bind(versions.back());
        ++inner_done;
      }
      win_obs.clear();
      win_states.clear();
      win_policies.clear();
      win_h = hc.h.values();
      win_c = hc.c.values();
    }
  }

  if (!ep.done()) {
    agent::StepOutput bout = net.forward(ep.observation(), hc.h, hc.c);
    buf.bootstrap = bout.value.item();
  }

  const std::vector<double> returns =
      compute_returns(buf.rewards(), ctx.a3c.gamma, buf.bootstrap);
  Losses losses = a3c_losses(buf, returns, ctx.a3c.gamma, ctx.a3c.entropy_weight);
  Tensor total = diff::add(losses.policy, diff::scale(losses.value, ctx.a3c.value_weight));
  diff::backward(total);

  GradMap grads;
  for (const auto& v : versions) diff::accumulate_grads(grads, v);
  for (auto& [name, g] : grads)
    for (const auto& prefix : ctx.freeze_zero)
      if (name.rfind(prefix, 0) == 0) std::fill(g.begin(), g.end(), 0.0);

  if (maml && !windows.empty()) {
    // d L_outer / d phi = -alpha * d/d phi [ grad_theta L_adapt . v ],
    // realized as a central difference of the adaptation-loss phi-gradient
    // along v, the outer gradient at theta_total.
    GradMap v_theta = filter_grads(grads, agent::in_theta_total);
    const double vnorm = diff::global_norm(v_theta);
    if (vnorm > 0.0) {
      const double eps = ctx.maml.fd_eps / std::max(1.0, vnorm);
      GradMap phi_grads;
      for (const auto& w : windows) {
        ParamSet& snap = versions[w.version];
        add_scaled_values(snap, v_theta, eps);
        net.bind(snap);
        GradMap gp = adapt_grads_for_window(net, snap, w, hidden);
        add_scaled_values(snap, v_theta, -2.0 * eps);
        net.bind(snap);
        GradMap gm = adapt_grads_for_window(net, snap, w, hidden);
        add_scaled_values(snap, v_theta, eps);
        const double coeff = -ctx.maml.inner_lr / (2.0 * eps);
        for (const auto& [name, up] : gp) {
          auto& acc = phi_grads[name];
          if (acc.empty()) acc.assign(up.size(), 0.0);
          const auto& dn = gm.at(name);
          for (size_t i = 0; i < up.size(); ++i) acc[i] += coeff * (up[i] - dn[i]);
        }
      }
      for (auto& [name, g] : phi_grads) grads[name] = std::move(g);
    }
  }

  std::map<std::string, double> overrides;
  if (maml) overrides["adapt."] = ctx.maml.outer_lr;
  store.apply(std::move(grads), overrides);

  EpisodeOutcome outcome;
  for (const auto& s : buf.steps) {
    outcome.total_reward += s.reward;
    outcome.mean_entropy += s.entropy.item();
  }
  outcome.steps = static_cast<int>(buf.steps.size());
  if (outcome.steps > 0) outcome.mean_entropy /= outcome.steps;
  outcome.policy_loss = losses.policy.item();
  outcome.value_loss = losses.value.item();
  return outcome;
}

}  // namespace

void worker_loop(int worker_id, const TrainContext& ctx, SharedParamStore& store,
                 std::atomic<bool>& stop, CsvLogger* progress) {
  std::map<std::uint64_t, env::HouseLayout> cache;
  PolicyNet net(ctx.agent_cfg, *ctx.vocab, ctx.adj);

  while (!stop.load()) {
    const long e = store.next_episode();
    if (e >= ctx.a3c.episodes) break;

    const env::HouseLayout* layout = nullptr;
    env::EpisodeSpec spec = training_episode_spec(e, ctx, &layout, cache);
    // Streams keyed by the episode index, not the worker, so single-worker
    // runs are bit-reproducible.
    Rng action_rng(mix_seed(ctx.run_seed, fnv1a64("actions") + static_cast<std::uint64_t>(e)));

    EpisodeOutcome out = run_training_episode(ctx, store, *layout, spec, action_rng, net);

    if (progress) {
      char row[160];
      std::snprintf(row, sizeof(row), "%ld,%d,%.4f,%.4f,%.4f,%.4f", e, worker_id,
                    out.total_reward, out.policy_loss, out.value_loss, out.mean_entropy);
      progress->append(row);
    }
  }
}

namespace {

// Contract errors abort the worker; the first exception wins and stops the
// pool, then train_run rethrows it on the coordinating thread.
void guarded_worker(int worker_id, const TrainContext& ctx, SharedParamStore& store,
                    std::atomic<bool>& stop, CsvLogger* progress, std::mutex& err_mu,
                    std::exception_ptr& err) {
  try {
    worker_loop(worker_id, ctx, store, stop, progress);
  } catch (...) {
    std::lock_guard<std::mutex> lock(err_mu);
    if (!err) err = std::current_exception();
    stop.store(true);
  }
}

}  // namespace

ParamSet train_run(const TrainContext& ctx, const std::string& out_dir,
                   std::atomic<bool>* external_stop, const std::string& resume_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  ParamSet init = agent::init_params(ctx.agent_cfg, ctx.run_seed);
  for (auto& [name, t] : init)
    for (const auto& prefix : ctx.freeze_zero)
      if (name.rfind(prefix, 0) == 0)
        std::fill(t.values().begin(), t.values().end(), 0.0);
  SharedParamStore store(std::move(init), ctx.a3c.lr, ctx.a3c.clip);
  if (!resume_dir.empty()) {
    diff::LoadedCheckpoint loaded = diff::load_checkpoint(resume_dir);
    if (loaded.meta.variant != agent::variant_name(ctx.agent_cfg.variant))
      throw std::runtime_error("resume checkpoint was trained as " + loaded.meta.variant +
                               ", not " + agent::variant_name(ctx.agent_cfg.variant));
    store.load_state(loaded.params, loaded.adam, loaded.meta.episode);
  }
  CsvLogger progress(out_dir + "/progress.csv",
                     "episode,worker,reward,policy_loss,value_loss,entropy");
  const std::string variant = agent::variant_name(ctx.agent_cfg.variant);

  std::atomic<bool> stop{false};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(ctx.a3c.workers));
  for (int w = 0; w < ctx.a3c.workers; ++w)
    workers.emplace_back(guarded_worker, w, std::cref(ctx), std::ref(store),
                         std::ref(stop), &progress, std::ref(err_mu), std::ref(err));

  long next_ckpt = ctx.a3c.checkpoint_every;
  auto workers_done = [&]() {
    return stop.load() || store.episodes_started() >= ctx.a3c.episodes;
  };
  while (!workers_done() && !(external_stop && external_stop->load())) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (ctx.a3c.checkpoint_every > 0 && store.episodes_started() >= next_ckpt) {
      store.save(out_dir + "/ckpt-" + std::to_string(next_ckpt), variant);
      next_ckpt += ctx.a3c.checkpoint_every;
    }
  }
  if (external_stop && external_stop->load()) stop.store(true);
  for (auto& t : workers) t.join();

  store.save(out_dir + "/checkpoint", variant);
  if (err) std::rethrow_exception(err);
  return store.snapshot();
}

RolloutResult rollout_episode(PolicyNet& net, const ParamSet& params,
                              const env::HouseLayout& layout, const env::EpisodeSpec& spec,
                              const env::EnvConfig& env_cfg, std::uint64_t sample_seed,
                              bool adapt, const MAMLConfig& maml) {
  // Weights reset to the checkpoint at every episode start; adaptation is
  // episode-local. Without adaptation no backward ever runs, so graph
  // construction is skipped entirely.
  std::unique_ptr<diff::NoGradGuard> no_grad;
  if (!adapt) no_grad = std::make_unique<diff::NoGradGuard>();

  std::deque<ParamSet> versions;
  versions.push_back(params.clone());
  net.bind(versions.back());

  env::Episode ep(layout, spec, *net.vocab(), env_cfg);
  diff::LstmState hc = net.initial_state();
  Rng action_rng(mix_seed(sample_seed, fnv1a64("eval-actions")));

  RolloutResult result;
  std::vector<Tensor> win_states, win_policies;
  int inner_done = 0;
  int since_update = 0;

  while (!ep.done()) {
    agent::StepOutput out = net.forward(ep.observation(), hc.h, hc.c);
    const int action = action_rng.categorical(out.policy.values().data(), env::kActionCount);
    env::StepResult res = ep.step(static_cast<env::Action>(action));
    result.actions.push_back(action);
    result.rewards.push_back(res.reward);
    result.values.push_back(out.value.item());
    win_states.push_back(out.state);
    win_policies.push_back(out.policy);
    hc = {out.h, out.c};
    ++since_update;

    if (adapt && since_update == maml.interval && inner_done < maml.max_inner &&
        !ep.done()) {
      Tensor l_adapt = agent::adaptation_loss(win_states, win_policies, net.params());
      diff::backward(l_adapt);
      GradMap g;
      for (const auto& v : versions) diff::accumulate_grads(g, v);
      diff::zero_grad_graph(l_adapt);
      diff::clip_global_norm(g, maml.inner_clip);
      versions.push_back(maml_inner_update(net.params(), g, maml.inner_lr));
      net.bind(versions.back());
      ++inner_done;
      win_states.clear();
      win_policies.clear();
      since_update = 0;
    } else if (since_update == maml.interval) {
      win_states.clear();
      win_policies.clear();
      since_update = 0;
    }
  }

  result.success = ep.success();
  result.steps = ep.steps_taken();
  return result;
}

RolloutResult rollout_random(const env::HouseLayout& layout, const env::EpisodeSpec& spec,
                             const kg::ObjectVocabulary& vocab, const env::EnvConfig& env_cfg,
                             std::uint64_t sample_seed) {
  env::Episode ep(layout, spec, vocab, env_cfg);
  Rng rng(mix_seed(sample_seed, fnv1a64("random-actions")));
  RolloutResult result;
  while (!ep.done()) {
    const int action = static_cast<int>(rng.below(env::kActionCount));
    env::StepResult res = ep.step(static_cast<env::Action>(action));
    result.actions.push_back(action);
    result.rewards.push_back(res.reward);
    result.values.push_back(0.0);
  }
  result.success = ep.success();
  result.steps = ep.steps_taken();
  return result;
}

}  // namespace gve::train
