#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "gve/paramset.hpp"
#include "gve/rng.hpp"
#include "gve/tensor.hpp"

using namespace gve;
using diff::ParamSet;
using diff::Tensor;

namespace {

Tensor random_leaf(diff::Shape shape, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(diff::shape_size(shape)));
  for (double& x : v) x = rng.uniform(-scale, scale);
  return Tensor::leaf(std::move(shape), std::move(v));
}

}  // namespace

TEST_SUITE("diffcore") {

TEST_CASE("matmul identity and hand arithmetic") {
  Tensor m = Tensor::constant({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor im = diff::matmul(Tensor::identity(3), m);
  for (int i = 0; i < 9; ++i) CHECK(im.at(i) == m.at(i));

  Tensor a = Tensor::constant({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::constant({2, 1}, {0, 1});
  Tensor c = diff::matmul(a, b);
  CHECK(c.at(0) == 2.0);
  CHECK(c.at(1) == 4.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_WITH_AS(diff::matmul(a, b), doctest::Contains("[2x3]"),
                       std::invalid_argument);
}

TEST_CASE("gradient of sum(A*B) wrt A equals ones * B^T") {
  ParamSet params;
  params.insert("A", random_leaf({3, 4}, 11));
  Tensor b = Tensor::constant({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});

  auto f = [&](ParamSet& p) { return diff::sum(diff::matmul(p.at("A"), b)); };
  CHECK(diff::grad_check(f, params, 1e-6) <= 1e-5);

  params.zero_grads();
  diff::backward(f(params));
  // ones(3x2) * B^T: each row of dA is the column sums of B^T rows = row sums of B.
  const auto& g = params.at("A").grad();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      const double expect = b.at(j, 0) + b.at(j, 1);
      CHECK(g[static_cast<size_t>(i) * 4 + j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("softmax symmetry, direct values, shift invariance") {
  Tensor x = Tensor::constant({3}, {0, 0, 0});
  Tensor s = diff::softmax(x);
  for (int i = 0; i < 3; ++i) CHECK(s.at(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Tensor y = diff::softmax(Tensor::constant({2}, {0.0, std::log(3.0)}));
  CHECK(y.at(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(y.at(1) == doctest::Approx(0.75).epsilon(1e-12));

  Tensor z = random_leaf({5}, 3, 4.0);
  Tensor shifted = diff::add(z, Tensor::full({5}, 17.5));
  Tensor s0 = diff::softmax(z), s1 = diff::softmax(shifted);
  for (int i = 0; i < 5; ++i)
    CHECK(s0.at(i) == doctest::Approx(s1.at(i)).epsilon(1e-12));
}

TEST_CASE("log_softmax agrees with log(softmax) and survives saturation") {
  Tensor x = random_leaf({5}, 404, 3.0);
  Tensor a = diff::log_softmax(x);
  Tensor b = diff::log(diff::softmax(x));
  for (int i = 0; i < 5; ++i) CHECK(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-12));

  // a logit gap far beyond double underflow stays finite
  Tensor extreme = Tensor::leaf({3}, {0.0, -900.0, -1200.0});
  Tensor ls = diff::log_softmax(extreme);
  for (int i = 0; i < 3; ++i) CHECK(std::isfinite(ls.at(i)));
  CHECK(ls.at(0) == doctest::Approx(0.0).epsilon(1e-12));
  // entropy built from the pair is exactly zero, not NaN
  Tensor entropy =
      diff::scale(diff::sum(diff::mul(diff::softmax(extreme), ls)), -1.0);
  CHECK(entropy.item() == 0.0);
}

TEST_CASE("softmax rows sum to 1 within 1e-12") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_leaf({4, 6}, rng.next_u64(), 30.0);
    Tensor s = diff::softmax(x, 1);
    for (int r = 0; r < 4; ++r) {
      double sum = 0;
      for (int j = 0; j < 6; ++j) sum += s.at(r, j);
      CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("lstm_step zero weights collapse to zero hidden") {
  const int d = 3, h = 4;
  Tensor x = Tensor::constant({d}, {0.3, -2.0, 5.0});
  Tensor h0 = Tensor::zeros({h});
  Tensor c0 = Tensor::zeros({h});
  auto [h1, c1] = diff::lstm_step(x, h0, c0, Tensor::zeros({4 * h, d}),
                                  Tensor::zeros({4 * h, h}), Tensor::zeros({4 * h}));
  for (int i = 0; i < h; ++i) {
    CHECK(h1.at(i) == 0.0);
    CHECK(c1.at(i) == 0.0);
  }
}

TEST_CASE("lstm_step outputs stay inside the gate envelope") {
  // h' = o * tanh(c') with o in (0,1), so |h'| < 1 whatever the inputs.
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 5, h = 6;
    Tensor x = random_leaf({d}, rng.next_u64(), 3.0);
    Tensor h0 = random_leaf({h}, rng.next_u64(), 3.0);
    Tensor c0 = random_leaf({h}, rng.next_u64(), 3.0);
    auto [h1, c1] = diff::lstm_step(x, h0, c0, random_leaf({4 * h, d}, rng.next_u64()),
                                    random_leaf({4 * h, h}, rng.next_u64()),
                                    random_leaf({4 * h}, rng.next_u64()));
    for (int i = 0; i < h; ++i) CHECK(std::fabs(h1.at(i)) < 1.0);
    (void)c1;
  }
}

TEST_CASE("lstm_step full gradient check") {
  const int d = 3, h = 4;
  ParamSet params;
  params.insert("w_ih", random_leaf({4 * h, d}, 21));
  params.insert("w_hh", random_leaf({4 * h, h}, 22));
  params.insert("b", random_leaf({4 * h}, 23));
  Tensor x = Tensor::constant({d}, {0.5, -0.25, 0.75});
  Tensor h0 = Tensor::constant({h}, {0.1, -0.2, 0.3, -0.4});
  Tensor c0 = Tensor::constant({h}, {0.2, 0.1, -0.1, 0.05});

  auto f = [&](ParamSet& p) {
    auto [h1, c1] = diff::lstm_step(x, h0, c0, p.at("w_ih"), p.at("w_hh"), p.at("b"));
    (void)c1;
    return diff::sum(h1);
  };
  CHECK(diff::grad_check(f, params, 1e-6) <= 1e-5);
}

TEST_CASE("every primitive passes grad_check") {
  ParamSet params;
  params.insert("m", random_leaf({3, 4}, 31));
  params.insert("v", random_leaf({4}, 32));
  params.insert("sq", random_leaf({4, 4}, 33, 0.5));

  auto positive_sq = [&](ParamSet& p) {
    // keep row sums strictly positive for row_normalize / log domains
    return diff::add(diff::mul(p.at("sq"), p.at("sq")), Tensor::full({4, 4}, 0.1));
  };

  using Case = std::pair<const char*, std::function<Tensor(ParamSet&)>>;
  std::vector<Case> cases = {
      {"matmul", [&](ParamSet& p) { return diff::sum(diff::matmul(p.at("m"), p.at("sq"))); }},
      {"add", [&](ParamSet& p) { return diff::sum(diff::add(p.at("v"), p.at("v"))); }},
      {"mul", [&](ParamSet& p) { return diff::sum(diff::mul(p.at("v"), p.at("v"))); }},
      {"scale", [&](ParamSet& p) { return diff::sum(diff::scale(p.at("m"), -2.5)); }},
      {"relu", [&](ParamSet& p) { return diff::sum(diff::relu(p.at("m"))); }},
      {"sigmoid", [&](ParamSet& p) { return diff::sum(diff::sigmoid(p.at("m"))); }},
      {"tanh", [&](ParamSet& p) { return diff::sum(diff::tanh(p.at("m"))); }},
      {"log", [&](ParamSet& p) { return diff::sum(diff::log(positive_sq(p))); }},
      {"softmax", [&](ParamSet& p) {
         return diff::sum(diff::mul(diff::softmax(p.at("v")), p.at("v")));
       }},
      {"log_softmax", [&](ParamSet& p) {
         return diff::sum(diff::mul(diff::log_softmax(p.at("v")), p.at("v")));
       }},
      {"concat", [&](ParamSet& p) {
         return diff::sum(diff::concat({p.at("v"), diff::mul(p.at("v"), p.at("v"))}, 0));
       }},
      {"slice", [&](ParamSet& p) { return diff::sum(diff::slice(p.at("m"), 1, 1, 2)); }},
      {"reshape", [&](ParamSet& p) {
         return diff::sum(diff::mul(diff::reshape(p.at("m"), {12}),
                                    diff::reshape(p.at("m"), {12})));
       }},
      {"mean_all", [&](ParamSet& p) { return diff::mean_all(p.at("m")); }},
      {"mean_rows", [&](ParamSet& p) { return diff::sum(diff::mean_rows(p.at("m"))); }},
      {"row_normalize", [&](ParamSet& p) {
         return diff::sum(diff::mul(diff::row_normalize(positive_sq(p)), p.at("sq")));
       }},
  };
  for (auto& [name, f] : cases) {
    INFO(name);
    CHECK(diff::grad_check(f, params, 1e-6) <= 1e-5);
  }
}

TEST_CASE("grad_check on linear objective is near zero") {
  ParamSet params;
  params.insert("theta", random_leaf({6}, 41));
  auto f = [](ParamSet& p) { return diff::sum(p.at("theta")); };
  CHECK(diff::grad_check(f, params, 1e-6) <= 1e-9);
}

TEST_CASE("corrupted analytic gradient is detected") {
  ParamSet params;
  params.insert("theta", random_leaf({5}, 42));
  auto f = [](ParamSet& p) { return diff::sum(diff::mul(p.at("theta"), p.at("theta"))); };

  params.zero_grads();
  diff::backward(f(params));
  diff::GradMap analytic = diff::harvest_grads(params);
  analytic["theta"][2] += 1.0;  // inject a fault

  const double eps = 1e-6;
  double max_rel = 0.0;
  auto& w = params.at("theta").values();
  for (size_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + eps;
    const double up = f(params).item();
    w[i] = keep - eps;
    const double down = f(params).item();
    w[i] = keep;
    const double numeric = (up - down) / (2 * eps);
    const double a = analytic["theta"][i];
    max_rel = std::max(max_rel,
                       std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)}));
  }
  CHECK(max_rel >= 0.1);
}

TEST_CASE("backward requires a scalar and accumulates additively") {
  ParamSet params;
  params.insert("theta", random_leaf({3}, 51));
  Tensor y = diff::mul(params.at("theta"), params.at("theta"));
  CHECK_THROWS_AS(diff::backward(y), std::logic_error);

  Tensor loss = diff::sum(y);
  params.zero_grads();
  diff::backward(loss);
  const std::vector<double> once = params.at("theta").grad();
  diff::backward(loss);
  const std::vector<double>& twice = params.at("theta").grad();
  for (size_t i = 0; i < once.size(); ++i)
    CHECK(twice[i] == doctest::Approx(2 * once[i]).epsilon(1e-15));
}

TEST_CASE("backward is bit-deterministic after zeroing") {
  ParamSet params;
  params.insert("a", random_leaf({4, 4}, 61));
  params.insert("b", random_leaf({4, 4}, 62));
  Tensor loss = diff::sum(
      diff::matmul(diff::softmax(params.at("a"), 1), diff::tanh(params.at("b"))));

  params.zero_grads();
  diff::zero_grad_graph(loss);
  diff::backward(loss);
  const std::vector<double> first_a = params.at("a").grad();
  const std::vector<double> first_b = params.at("b").grad();

  diff::zero_grad_graph(loss);
  diff::backward(loss);
  for (size_t i = 0; i < first_a.size(); ++i) {
    CHECK(params.at("a").grad()[i] == first_a[i]);
    CHECK(params.at("b").grad()[i] == first_b[i]);
  }
}

TEST_CASE("gradients stay finite through a deep chain") {
  ParamSet params;
  params.insert("w", random_leaf({8, 8}, 71));
  Tensor x = Tensor::full({8}, 0.5);
  for (int i = 0; i < 40; ++i) x = diff::tanh(diff::matmul(params.at("w"), x));
  params.zero_grads();
  diff::backward(diff::sum(x));
  for (double g : params.at("w").grad()) CHECK(std::isfinite(g));
}

TEST_CASE("sgd_step arithmetic and purity") {
  ParamSet params;
  params.insert("theta", Tensor::leaf({1}, {1.0}));
  diff::GradMap zero{{"theta", {0.0}}};
  ParamSet same = diff::sgd_step(params, zero, 0.1);
  CHECK(same.at("theta").at(0) == 1.0);

  diff::GradMap g{{"theta", {2.0}}};
  ParamSet stepped = diff::sgd_step(params, g, 0.1);
  CHECK(stepped.at("theta").at(0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(params.at("theta").at(0) == 1.0);  // input untouched
}

TEST_CASE("adam first step magnitude is about lr regardless of gradient size") {
  for (double gval : {0.001, 1.0, 1000.0}) {
    ParamSet params;
    params.insert("theta", Tensor::leaf({1}, {5.0}));
    diff::AdamState state;
    diff::adam_step(params, {{"theta", {gval}}}, state, 0.01);
    CHECK(std::fabs(5.0 - params.at("theta").at(0)) ==
          doctest::Approx(0.01).epsilon(1e-3));
  }
}

TEST_CASE("global norm clip scales gradients") {
  diff::GradMap g{{"a", {6.0}}, {"b", {8.0}}};  // norm 10
  CHECK(diff::global_norm(g) == doctest::Approx(10.0));
  diff::clip_global_norm(g, 1.0);
  CHECK(g["a"][0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(g["b"][0] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("paramset names unique, iteration lexicographic") {
  ParamSet p;
  p.insert("b.x", Tensor::leaf({1}, {1.0}));
  p.insert("a.y", Tensor::leaf({1}, {2.0}));
  CHECK_THROWS_AS(p.insert("a.y", Tensor::leaf({1}, {3.0})), std::invalid_argument);
  std::vector<std::string> names;
  for (const auto& [name, t] : p) names.push_back(name);
  CHECK(names == std::vector<std::string>{"a.y", "b.x"});
}

TEST_CASE("checkpoint roundtrip validates shapes and hashes deterministically") {
  namespace fs = std::filesystem;
  const std::string dir = "ckpt_test_dir";
  ParamSet p;
  p.insert("w", random_leaf({3, 2}, 81));
  p.insert("b", random_leaf({2}, 82));

  diff::CheckpointMeta meta{"A3C", 42};
  diff::AdamState adam;
  adam.m["w"] = std::vector<double>(6, 0.5);
  adam.v["w"] = std::vector<double>(6, 0.25);
  adam.step = 7;
  diff::save_checkpoint(dir, p, meta, &adam);

  auto loaded = diff::load_checkpoint(dir);
  CHECK(loaded.meta.variant == "A3C");
  CHECK(loaded.meta.episode == 42);
  CHECK(loaded.has_adam);
  CHECK(loaded.adam.step == 7);
  CHECK(loaded.params.at("w").shape() == diff::Shape{3, 2});
  for (int i = 0; i < 6; ++i) CHECK(loaded.params.at("w").at(i) == p.at("w").at(i));

  const auto h1 = diff::checkpoint_hash(dir);
  diff::save_checkpoint(dir, p, meta, &adam);
  CHECK(diff::checkpoint_hash(dir) == h1);

  ParamSet q = p.clone();
  q.at("w").values()[0] += 1e-9;
  diff::save_checkpoint(dir, q, meta, &adam);
  CHECK(diff::checkpoint_hash(dir) != h1);
  fs::remove_all(dir);
}

TEST_CASE("no-grad mode skips graph construction") {
  ParamSet p;
  p.insert("w", random_leaf({3}, 91));
  diff::NoGradGuard guard;
  Tensor y = diff::sum(diff::mul(p.at("w"), p.at("w")));
  CHECK_FALSE(y.requires_grad());
}

}  // TEST_SUITE
