#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gve/runner.hpp"
#include "gve/rng.hpp"
#include "gve/trainer.hpp"

using namespace gve;
using agent::PolicyNet;
using agent::Variant;
using diff::GradMap;
using diff::ParamSet;
using diff::Tensor;
using train::TrajectoryBuffer;

namespace {

const kg::ObjectVocabulary& vocab() {
  static const kg::ObjectVocabulary v = kg::make_toy_vocabulary();
  return v;
}

// Brute-force discounted suffix sum, the compute_returns oracle.
double suffix_sum(const std::vector<double>& r, size_t t, double gamma, double bootstrap) {
  double acc = 0.0;
  for (size_t j = t; j < r.size(); ++j) acc += std::pow(gamma, double(j - t)) * r[j];
  return acc + std::pow(gamma, double(r.size() - t)) * bootstrap;
}

TrajectoryBuffer make_buffer(const std::vector<double>& rewards,
                             const std::vector<double>& values,
                             const std::vector<double>& probs, double bootstrap,
                             bool terminal) {
  TrajectoryBuffer buf;
  for (size_t t = 0; t < rewards.size(); ++t) {
    Tensor policy = diff::softmax(
        Tensor::leaf({6}, {std::log(probs[t]), std::log((1 - probs[t]) / 5),
                           std::log((1 - probs[t]) / 5), std::log((1 - probs[t]) / 5),
                           std::log((1 - probs[t]) / 5), std::log((1 - probs[t]) / 5)}));
    Tensor logpi = diff::log(diff::slice(policy, 0, 0, 1));
    Tensor entropy = diff::scale(diff::sum(diff::mul(policy, diff::log(policy))), -1.0);
    Tensor value = diff::mul(Tensor::leaf({1}, {values[t]}), Tensor::scalar(1.0));
    buf.steps.push_back({{}, 0, rewards[t], logpi, entropy, value,
                         terminal && t + 1 == rewards.size()});
  }
  buf.bootstrap = bootstrap;
  return buf;
}

cli::RunConfig tiny_train_config(const std::string& variant, long episodes,
                                 const std::string& seed) {
  cli::RunConfig cfg = cli::RunConfig::defaults();
  cfg.set("agent.variant", variant);
  cfg.set("run.seed", seed);
  cfg.set("train.episodes", std::to_string(episodes));
  cfg.set("train.workers", "1");
  cfg.set("train.checkpoint_every", "0");
  cfg.set("agent.enc_dim", "16");
  cfg.set("agent.lstm_hidden", "16");
  cfg.set("agent.z_dim", "8");
  cfg.set("agent.adapt_hidden", "8");
  cfg.set("gtn.hidden", "8");
  cfg.set("gtn.q_dim", "8");
  cfg.set("graph.views_per_house", "25");
  cfg.set("env.max_steps_train", "20");
  cfg.set("train.segment_len", "20");
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("compute_returns: the worked three-step example") {
  auto g = train::compute_returns({-0.01, -0.01, 5.0}, 0.99, 0.0);
  CHECK(std::fabs(g[0] - 4.8806) <= 1e-12);
  CHECK(std::fabs(g[1] - 4.9400) <= 1e-12);
  CHECK(std::fabs(g[2] - 5.0000) <= 1e-12);
}

TEST_CASE("compute_returns: gamma zero and pure bootstrap propagation") {
  auto g0 = train::compute_returns({1.0, 2.0, 3.0}, 0.0, 9.0);
  CHECK(g0 == std::vector<double>{1.0, 2.0, 3.0});

  const double b = 7.0, gamma = 0.9;
  auto gb = train::compute_returns({0.0, 0.0, 0.0, 0.0}, gamma, b);
  for (size_t t = 0; t < gb.size(); ++t)
    CHECK(gb[t] == doctest::Approx(std::pow(gamma, double(4 - t)) * b).epsilon(1e-12));
}

TEST_CASE("compute_returns matches the brute-force double loop up to length 200") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t len = 1 + rng.below(200);
    std::vector<double> rewards(len);
    for (double& r : rewards) r = rng.uniform(-1.0, 1.0);
    const double bootstrap = rng.uniform(-2.0, 2.0);
    const double gamma = 0.99;
    auto g = train::compute_returns(rewards, gamma, bootstrap);
    for (size_t t = 0; t < len; ++t)
      CHECK(std::fabs(g[t] - suffix_sum(rewards, t, gamma, bootstrap)) <= 1e-12);
  }
}

TEST_CASE("a3c_losses: perfect critic zeroes the value loss") {
  std::vector<double> rewards = {-0.01, -0.01, 5.0};
  auto returns = train::compute_returns(rewards, 0.99, 0.0);
  auto buf = make_buffer(rewards, returns, {0.4, 0.4, 0.4}, 0.0, true);
  auto losses = train::a3c_losses(buf, returns, 0.99, 0.0);
  CHECK(losses.value.item() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("a3c_losses: uniform policy entropy totals T ln 6") {
  TrajectoryBuffer buf;
  const int T = 7;
  for (int t = 0; t < T; ++t) {
    Tensor policy = diff::softmax(Tensor::leaf({6}, std::vector<double>(6, 0.0)));
    Tensor logpi = diff::log(diff::slice(policy, 0, 0, 1));
    Tensor entropy = diff::scale(diff::sum(diff::mul(policy, diff::log(policy))), -1.0);
    buf.steps.push_back({{}, 0, -0.01, logpi, entropy, Tensor::leaf({1}, {0.0}), t == T - 1});
  }
  double total_entropy = 0.0;
  for (const auto& s : buf.steps) total_entropy += s.entropy.item();
  CHECK(total_entropy == doctest::Approx(T * std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("a3c_losses: single terminal step arithmetic") {
  // V=1, r=5, terminal: advantage 4; with G=5 the value loss is 8.
  auto buf = make_buffer({5.0}, {1.0}, {0.5}, 0.0, true);
  auto returns = train::compute_returns({5.0}, 0.99, 0.0);
  REQUIRE(returns[0] == 5.0);
  auto losses = train::a3c_losses(buf, returns, 0.99, 0.0);
  CHECK(losses.value.item() == doctest::Approx(8.0).epsilon(1e-12));
  // L_pi = -log(0.5) * 4 with no entropy term
  CHECK(losses.policy.item() == doctest::Approx(-std::log(0.5) * 4.0).epsilon(1e-12));
}

TEST_CASE("a3c_losses: entropy enters as a bonus") {
  auto buf = make_buffer({1.0}, {1.0}, {0.5}, 0.0, true);
  auto returns = train::compute_returns({1.0}, 0.99, 0.0);
  auto no_bonus = train::a3c_losses(buf, returns, 0.99, 0.0);
  auto with_bonus = train::a3c_losses(buf, returns, 0.99, 0.5);
  CHECK(with_bonus.policy.item() < no_bonus.policy.item());
}

TEST_CASE("a3c_losses: length mismatch is an error") {
  auto buf = make_buffer({1.0, 1.0}, {0.0, 0.0}, {0.5, 0.5}, 0.0, true);
  CHECK_THROWS_AS(train::a3c_losses(buf, {1.0}, 0.99, 0.0), std::invalid_argument);
}

TEST_CASE("the policy term leaves critic parameters untouched") {
  // detachment contract: backward(L_pi) puts exactly zero into theta_v
  auto cfg = tiny_train_config("GVE", 1, "1");
  auto agent_cfg = cfg.agent_config(vocab().size());
  auto params = agent::init_params(agent_cfg, 1);
  auto adj = cli::build_training_graph(cfg, vocab());
  PolicyNet net(agent_cfg, vocab(), &adj);
  net.bind(params);

  auto layout = env::generate_house(3, kg::RoomType::Living, vocab());
  auto spec = env::sample_episode(layout, 4, 10, "train");
  env::Episode ep(layout, spec, vocab());
  auto hc = net.initial_state();
  TrajectoryBuffer buf;
  Rng rng(5);
  while (!ep.done()) {
    auto obs = ep.observation();
    auto out = net.forward(obs, hc.h, hc.c);
    int a = rng.categorical(out.policy.values().data(), 6);
    auto res = ep.step(static_cast<env::Action>(a));
    Tensor logpi = diff::log(diff::slice(out.policy, 0, a, 1));
    Tensor entropy = diff::scale(diff::sum(diff::mul(out.policy, diff::log(out.policy))), -1.0);
    buf.steps.push_back({obs, a, res.reward, logpi, entropy, out.value, res.done});
    hc = {out.h, out.c};
  }
  auto returns = train::compute_returns(buf.rewards(), 0.99, 0.0);
  auto losses = train::a3c_losses(buf, returns, 0.99, 0.01);
  params.zero_grads();
  diff::backward(losses.policy);
  for (const auto& [name, t] : params) {
    if (name.rfind("critic.", 0) != 0) continue;
    if (!t.has_grad()) continue;
    for (double g : t.grad()) CHECK(g == 0.0);
  }
}

TEST_CASE("maml inner update touches theta_total only and is pure") {
  ParamSet p;
  p.insert("enc.W", Tensor::leaf({1}, {1.0}));
  p.insert("critic.Wf", Tensor::leaf({1}, {3.0}));
  GradMap g{{"enc.W", {2.0}}, {"critic.Wf", {10.0}}};

  ParamSet same = train::maml_inner_update(p, {}, 0.1);
  CHECK(same.at("enc.W").at(0) == 1.0);

  ParamSet stepped = train::maml_inner_update(p, g, 0.1);
  CHECK(stepped.at("enc.W").at(0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(stepped.at("critic.Wf").at(0) == 3.0);  // not part of theta_total
  CHECK(p.at("enc.W").at(0) == 1.0);            // input retained for the outer update
}

TEST_CASE("two inner updates equal one with summed gradients on a linear loss") {
  // loss(theta) = c . theta has a constant gradient, so composition is exact
  ParamSet p;
  p.insert("actor.W", Tensor::leaf({3}, {1.0, -2.0, 0.5}));
  GradMap c{{"actor.W", {0.3, -0.1, 0.7}}};
  const double alpha = 0.05;

  ParamSet two = train::maml_inner_update(train::maml_inner_update(p, c, alpha), c, alpha);
  GradMap summed{{"actor.W", {0.6, -0.2, 1.4}}};
  ParamSet one = train::maml_inner_update(p, summed, alpha);
  for (int i = 0; i < 3; ++i)
    CHECK(two.at("actor.W").at(i) == doctest::Approx(one.at("actor.W").at(i)).epsilon(1e-15));
}

TEST_CASE("maml outer update follows the literal rule") {
  ParamSet theta_i;
  theta_i.insert("enc.W", Tensor::leaf({1}, {2.0}));
  ParamSet phi;
  phi.insert("adapt.w2", Tensor::leaf({1}, {0.5}));
  auto [theta, phi2] = train::maml_outer_update(theta_i, {{"enc.W", {1.0}}}, 0.1, phi,
                                                {{"adapt.w2", {2.0}}}, 0.01);
  CHECK(theta.at("enc.W").at(0) == doctest::Approx(1.9).epsilon(1e-15));
  CHECK(phi2.at("adapt.w2").at(0) == doctest::Approx(0.48).epsilon(1e-15));
}

TEST_CASE("adaptation loss gradient check over phi and theta") {
  auto cfg = tiny_train_config("GVE_MAML", 1, "1");
  auto agent_cfg = cfg.agent_config(vocab().size());
  auto adj = cli::build_training_graph(cfg, vocab());
  auto params = agent::init_params(agent_cfg, 7);
  PolicyNet net(agent_cfg, vocab(), &adj);

  auto layout = env::generate_house(8, kg::RoomType::Bathroom, vocab());
  auto spec = env::sample_episode(layout, 9, 10, "train");
  std::vector<env::Observation> obs_seq;
  {
    env::Episode ep(layout, spec, vocab());
    Rng rng(10);
    for (int t = 0; t < 4 && !ep.done(); ++t) {
      obs_seq.push_back(ep.observation());
      ep.step(static_cast<env::Action>(rng.below(6)));
    }
  }

  auto f = [&](ParamSet& p) {
    net.bind(p);
    auto hc = net.initial_state();
    std::vector<Tensor> states, policies;
    for (const auto& o : obs_seq) {
      auto out = net.forward(o, hc.h, hc.c);
      states.push_back(out.state);
      policies.push_back(out.policy);
      hc = {out.h, out.c};
    }
    return agent::adaptation_loss(states, policies, p);
  };
  CHECK(diff::grad_check(f, params, 1e-6) <= 1e-5);
}

TEST_CASE("store: zero gradients leave parameters unchanged, applies count up") {
  ParamSet p;
  p.insert("w", Tensor::leaf({2}, {1.0, -1.0}));
  train::SharedParamStore store(p.clone(), 1e-3, 10.0);
  store.apply({{"w", {0.0, 0.0}}});
  store.apply({{"w", {0.0, 0.0}}});
  auto snap = store.snapshot();
  CHECK(snap.at("w").at(0) == 1.0);
  CHECK(snap.at("w").at(1) == -1.0);
  CHECK(store.applies() == 2);
}

TEST_CASE("store clips by global norm before the optimizer step") {
  // two stores, one fed the oversized gradient, one fed the pre-clipped
  // gradient: identical results
  ParamSet p;
  p.insert("w", Tensor::leaf({2}, {0.0, 0.0}));
  train::SharedParamStore big(p.clone(), 1e-2, 1.0);
  train::SharedParamStore pre(p.clone(), 1e-2, 1e18);
  big.apply({{"w", {6.0, 8.0}}});   // norm 10, clip 1
  pre.apply({{"w", {0.6, 0.8}}});
  auto a = big.snapshot(), b = pre.snapshot();
  CHECK(a.at("w").at(0) == b.at("w").at(0));
  CHECK(a.at("w").at(1) == b.at("w").at(1));
}

TEST_CASE("store rejects non-finite gradients") {
  ParamSet p;
  p.insert("w", Tensor::leaf({1}, {0.0}));
  train::SharedParamStore store(p.clone(), 1e-3, 10.0);
  CHECK_THROWS_AS(store.apply({{"w", {std::nan("")}}}), std::logic_error);
}

TEST_CASE("critic regression on a frozen trajectory set decreases monotonically") {
  // quadratic objective in (Wf, b): plain gradient descent with a small
  // step is monotone
  Rng rng(77);
  const int T = 40, dim = 10;
  std::vector<std::vector<double>> feats(T, std::vector<double>(dim));
  std::vector<double> targets(T);
  for (int t = 0; t < T; ++t) {
    for (double& x : feats[static_cast<size_t>(t)]) x = rng.uniform(-1, 1);
    targets[static_cast<size_t>(t)] = rng.uniform(-1, 5);
  }

  ParamSet critic;
  critic.insert("critic.Wf", Tensor::leaf({1, dim}, std::vector<double>(dim, 0.0)));
  critic.insert("critic.b", Tensor::leaf({1}, {0.0}));

  auto loss_of = [&](ParamSet& p) {
    Tensor total;
    for (int t = 0; t < T; ++t) {
      Tensor f = Tensor::constant({dim}, feats[static_cast<size_t>(t)]);
      Tensor v = diff::add(diff::matmul(p.at("critic.Wf"), f), p.at("critic.b"));
      Tensor err = diff::sub(v, Tensor::scalar(targets[static_cast<size_t>(t)]));
      Tensor term = diff::scale(diff::mul(err, err), 0.5);
      total = total.defined() ? diff::add(total, term) : term;
    }
    return total;
  };

  double prev = loss_of(critic).item();
  for (int it = 0; it < 100; ++it) {
    critic.zero_grads();
    Tensor loss = loss_of(critic);
    diff::backward(loss);
    critic = diff::sgd_step(critic, diff::harvest_grads(critic), 1e-3);
    const double cur = loss_of(critic).item();
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("single-worker training is bit-deterministic") {
  namespace fs = std::filesystem;
  auto cfg = tiny_train_config("A3C", 10, "5");
  cli::run_training(cfg, "det_run_a");
  cli::run_training(cfg, "det_run_b");
  CHECK(diff::checkpoint_hash("det_run_a/checkpoint") ==
        diff::checkpoint_hash("det_run_b/checkpoint"));

  auto cfg2 = tiny_train_config("A3C", 10, "6");
  cli::run_training(cfg2, "det_run_c");
  CHECK(diff::checkpoint_hash("det_run_a/checkpoint") !=
        diff::checkpoint_hash("det_run_c/checkpoint"));
  fs::remove_all("det_run_a");
  fs::remove_all("det_run_b");
  fs::remove_all("det_run_c");
}

TEST_CASE("maml training smoke: phi receives gradient through the inner step") {
  namespace fs = std::filesystem;
  auto cfg = tiny_train_config("GVE_MAML", 8, "3");
  cfg.set("maml.interval", "4");
  auto before = agent::init_params(cfg.agent_config(vocab().size()),
                                   static_cast<std::uint64_t>(cfg.integer("run.seed")));
  auto after = cli::run_training(cfg, "maml_smoke_run");
  bool phi_moved = false;
  for (const auto& [name, t] : after)
    if (agent::is_adapt_param(name) && t.values() != before.at(name).values())
      phi_moved = true;
  CHECK(phi_moved);
  fs::remove_all("maml_smoke_run");
}

TEST_CASE("test-time adaptation with zero inner rate replays the base policy") {
  auto cfg = tiny_train_config("GVE_MAML", 1, "1");
  auto agent_cfg = cfg.agent_config(vocab().size());
  auto adj = cli::build_training_graph(cfg, vocab());
  auto params = agent::init_params(agent_cfg, 21);
  PolicyNet net(agent_cfg, vocab(), &adj);

  auto layout = env::generate_house(33, kg::RoomType::Bedroom, vocab());
  auto spec = env::sample_episode(layout, 34, 40, "test");

  train::MAMLConfig maml = cfg.maml_config();
  maml.inner_lr = 0.0;
  auto adapted = train::rollout_episode(net, params, layout, spec, cfg.env_config(), 99,
                                        true, maml);
  auto plain = train::rollout_episode(net, params, layout, spec, cfg.env_config(), 99,
                                      false, maml);
  CHECK(adapted.actions == plain.actions);
  CHECK(adapted.rewards == plain.rewards);
  CHECK(adapted.values == plain.values);

  // with a real inner rate the trace is allowed to diverge; just confirm
  // the adapted rollout still terminates cleanly
  maml.inner_lr = 0.05;
  auto moved = train::rollout_episode(net, params, layout, spec, cfg.env_config(), 99,
                                      true, maml);
  CHECK(moved.steps > 0);
}

TEST_CASE("GVE with a frozen zero W1 replays A3C bit-for-bit over training") {
  // same seeds, graph aggregation frozen at zero: per-episode rewards,
  // losses and the shared parameters must match exactly
  namespace fs = std::filesystem;
  auto base = tiny_train_config("A3C", 12, "9");
  auto final_a3c = cli::run_training(base, "reduction_a3c");

  auto gve = tiny_train_config("GVE", 12, "9");
  gve.set("train.freeze_zero", "critic.Wq");
  auto final_gve = cli::run_training(gve, "reduction_gve");

  std::ifstream a("reduction_a3c/progress.csv"), b("reduction_gve/progress.csv");
  REQUIRE(a.good());
  REQUIRE(b.good());
  std::string la, lb;
  int rows = 0;
  while (std::getline(a, la)) {
    REQUIRE(std::getline(b, lb));
    CHECK(la == lb);
    ++rows;
  }
  CHECK(rows == 13);  // header + one row per episode

  for (const auto& [name, t] : final_a3c) {
    REQUIRE(final_gve.contains(name));
    CHECK(final_gve.at(name).values() == t.values());
  }
  for (double w : final_gve.at("critic.Wq").values()) CHECK(w == 0.0);
  fs::remove_all("reduction_a3c");
  fs::remove_all("reduction_gve");
}

}  // TEST_SUITE
