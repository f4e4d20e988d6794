#include "gve/paramset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "gve/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written as host little-endian doubles");

namespace gve::diff {

namespace fs = std::filesystem;
using nlohmann::json;

void ParamSet::insert(const std::string& name, Tensor t) {
  if (items_.count(name))
    throw std::invalid_argument("ParamSet: duplicate parameter name " + name);
  if (!t.requires_grad())
    throw std::invalid_argument("ParamSet: parameter " + name + " must require grad");
  items_.emplace(name, std::move(t));
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) throw std::out_of_range("ParamSet: no parameter " + name);
  return it->second;
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = items_.find(name);
  if (it == items_.end()) throw std::out_of_range("ParamSet: no parameter " + name);
  return it->second;
}

long ParamSet::total_elements() const {
  long n = 0;
  for (const auto& [name, t] : items_) n += t.size();
  return n;
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [name, t] : items_)
    out.insert(name, Tensor::leaf(t.shape(), t.values()));
  return out;
}

void ParamSet::zero_grads() {
  for (auto& [name, t] : items_) t.zero_grad();
}

GradMap harvest_grads(const ParamSet& p) {
  GradMap out;
  for (const auto& [name, t] : p) {
    if (t.has_grad())
      out[name] = t.grad();
    else
      out[name].assign(static_cast<size_t>(t.size()), 0.0);
  }
  return out;
}

void accumulate_grads(GradMap& into, const ParamSet& p) {
  for (const auto& [name, t] : p) {
    if (!t.has_grad()) continue;
    auto it = into.find(name);
    if (it == into.end()) {
      into[name] = t.grad();
    } else {
      const auto& g = t.grad();
      for (size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }
}

double global_norm(const GradMap& g) {
  double acc = 0.0;
  for (const auto& [name, v] : g)
    for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void clip_global_norm(GradMap& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm <= max_norm || norm == 0.0) return;
  scale_grads(g, max_norm / norm);
}

void scale_grads(GradMap& g, double factor) {
  for (auto& [name, v] : g)
    for (double& x : v) x *= factor;
}

ParamSet sgd_step(const ParamSet& params, const GradMap& grads, double lr) {
  ParamSet out;
  for (const auto& [name, t] : params) {
    std::vector<double> v = t.values();
    auto it = grads.find(name);
    if (it != grads.end()) {
      const auto& g = it->second;
      if (g.size() != v.size())
        throw std::invalid_argument("sgd_step: gradient size mismatch for " + name);
      for (size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    }
    out.insert(name, Tensor::leaf(t.shape(), std::move(v)));
  }
  return out;
}

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state, double lr) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (auto& [name, t] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const auto& g = git->second;
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != g.size()) m.assign(g.size(), 0.0);
    if (v.size() != g.size()) v.assign(g.size(), 0.0);
    auto& w = t.values();
    for (size_t i = 0; i < g.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double grad_check(const std::function<Tensor(ParamSet&)>& f, ParamSet& params, double eps) {
  params.zero_grads();
  Tensor loss = f(params);
  backward(loss);
  GradMap analytic = harvest_grads(params);

  double max_rel = 0.0;
  NoGradGuard no_grad;  // the probe evaluations never backprop
  for (auto& [name, t] : params) {
    auto& w = t.values();
    const auto& a = analytic[name];
    for (size_t i = 0; i < w.size(); ++i) {
      const double keep = w[i];
      w[i] = keep + eps;
      const double up = f(params).item();
      w[i] = keep - eps;
      const double down = f(params).item();
      w[i] = keep;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({1.0, std::fabs(a[i]), std::fabs(numeric)});
      max_rel = std::max(max_rel, std::fabs(a[i] - numeric) / denom);
    }
  }
  return max_rel;
}

Tensor init_uniform_fanin(Shape shape, int fan_in, std::uint64_t seed) {
  const double bound = std::sqrt(1.0 / fan_in);
  Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(shape_size(shape)));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::leaf(std::move(shape), std::move(v));
}

namespace {

void write_blob(const fs::path& path, const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

std::vector<double> read_blob(const fs::path& path, size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  std::vector<double> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<size_t>(in.gcount()) != count * sizeof(double))
    throw std::runtime_error("checkpoint: short read on " + path.string());
  return data;
}

}  // namespace

void save_checkpoint(const std::string& dir, const ParamSet& params,
                     const CheckpointMeta& meta, const AdamState* adam) {
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = 1;
  manifest["dtype"] = "float64";
  manifest["variant"] = meta.variant;
  manifest["episode"] = meta.episode;

  std::vector<double> blob;
  json plist = json::array();
  for (const auto& [name, t] : params) {
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["offset"] = blob.size();
    entry["count"] = t.size();
    plist.push_back(entry);
    blob.insert(blob.end(), t.values().begin(), t.values().end());
  }
  manifest["params"] = plist;
  write_blob(fs::path(dir) / "params.bin", blob);

  if (adam) {
    std::vector<double> oblob;
    json slots = json::array();
    for (const auto& [name, t] : params) {
      auto mit = adam->m.find(name);
      auto vit = adam->v.find(name);
      if (mit == adam->m.end() || vit == adam->v.end()) continue;
      json entry;
      entry["name"] = name;
      entry["offset"] = oblob.size();
      entry["count"] = mit->second.size();
      slots.push_back(entry);
      oblob.insert(oblob.end(), mit->second.begin(), mit->second.end());
      oblob.insert(oblob.end(), vit->second.begin(), vit->second.end());
    }
    manifest["optimizer"] = {{"type", "adam"},
                             {"step", adam->step},
                             {"beta1", adam->beta1},
                             {"beta2", adam->beta2},
                             {"eps", adam->eps},
                             {"slots", slots}};
    write_blob(fs::path(dir) / "optim.bin", oblob);
  }

  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("checkpoint: no manifest in " + dir);
  json manifest = json::parse(in);
  if (manifest.at("dtype").get<std::string>() != "float64")
    throw std::runtime_error("checkpoint: unsupported dtype");

  LoadedCheckpoint out;
  out.meta.variant = manifest.value("variant", "");
  out.meta.episode = manifest.value("episode", 0L);

  size_t total = 0;
  for (const auto& entry : manifest.at("params"))
    total += entry.at("count").get<size_t>();
  std::vector<double> blob = read_blob(fs::path(dir) / "params.bin", total);

  for (const auto& entry : manifest.at("params")) {
    Shape shape = entry.at("shape").get<Shape>();
    const size_t offset = entry.at("offset").get<size_t>();
    const size_t count = entry.at("count").get<size_t>();
    if (static_cast<size_t>(shape_size(shape)) != count)
      throw std::runtime_error("checkpoint: shape/count mismatch for " +
                               entry.at("name").get<std::string>());
    std::vector<double> vals(blob.begin() + offset, blob.begin() + offset + count);
    out.params.insert(entry.at("name").get<std::string>(),
                      Tensor::leaf(std::move(shape), std::move(vals)));
  }

  if (manifest.contains("optimizer")) {
    const auto& opt = manifest["optimizer"];
    out.has_adam = true;
    out.adam.step = opt.at("step").get<long>();
    out.adam.beta1 = opt.at("beta1").get<double>();
    out.adam.beta2 = opt.at("beta2").get<double>();
    out.adam.eps = opt.at("eps").get<double>();
    size_t ototal = 0;
    for (const auto& entry : opt.at("slots")) ototal += 2 * entry.at("count").get<size_t>();
    std::vector<double> oblob = read_blob(fs::path(dir) / "optim.bin", ototal);
    for (const auto& entry : opt.at("slots")) {
      const std::string name = entry.at("name").get<std::string>();
      const size_t offset = entry.at("offset").get<size_t>();
      const size_t count = entry.at("count").get<size_t>();
      out.adam.m[name].assign(oblob.begin() + offset, oblob.begin() + offset + count);
      out.adam.v[name].assign(oblob.begin() + offset + count,
                              oblob.begin() + offset + 2 * count);
    }
  }
  return out;
}

std::uint64_t checkpoint_hash(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "params.bin", std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot hash " + dir);
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace gve::diff
