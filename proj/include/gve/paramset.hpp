#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gve/tensor.hpp"

namespace gve::diff {

// Named parameter collection. std::map keeps iteration lexicographic and
// deterministic, which the training determinism tests rely on.
class ParamSet {
 public:
  using Map = std::map<std::string, Tensor>;
  using const_iterator = Map::const_iterator;
  using iterator = Map::iterator;

  void insert(const std::string& name, Tensor t);
  bool contains(const std::string& name) const { return items_.count(name) > 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);

  size_t size() const { return items_.size(); }
  long total_elements() const;
  const_iterator begin() const { return items_.begin(); }
  const_iterator end() const { return items_.end(); }
  iterator begin() { return items_.begin(); }
  iterator end() { return items_.end(); }

  ParamSet clone() const;  // fresh leaf tensors, values copied
  void zero_grads();

 private:
  Map items_;
};

using GradMap = std::map<std::string, std::vector<double>>;

// Copy current leaf gradients out of the set (zeros where untouched).
GradMap harvest_grads(const ParamSet& p);
// Sum another version's gradients in by name (first-order meta updates
// accumulate across parameter versions this way).
void accumulate_grads(GradMap& into, const ParamSet& p);

double global_norm(const GradMap& g);
void clip_global_norm(GradMap& g, double max_norm);
void scale_grads(GradMap& g, double factor);

// Pure update: inputs untouched, result is a fresh set. Required so meta
// inner updates can be unwound.
ParamSet sgd_step(const ParamSet& params, const GradMap& grads, double lr);

struct AdamState {
  std::map<std::string, std::vector<double>> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state, double lr);

// Max relative error between analytic gradients and central differences,
// checked coordinate by coordinate over every parameter.
double grad_check(const std::function<Tensor(ParamSet&)>& f, ParamSet& params,
                  double eps = 1e-6);

// Seeded uniform init in +-sqrt(1/fan_in).
Tensor init_uniform_fanin(Shape shape, int fan_in, std::uint64_t seed);

// Checkpoint directory: manifest.json plus raw little-endian float64 blobs
// (params.bin, optim.bin when optimizer state is present).
struct CheckpointMeta {
  std::string variant;
  long episode = 0;
};

void save_checkpoint(const std::string& dir, const ParamSet& params,
                     const CheckpointMeta& meta, const AdamState* adam = nullptr);

struct LoadedCheckpoint {
  ParamSet params;
  CheckpointMeta meta;
  AdamState adam;
  bool has_adam = false;
};

LoadedCheckpoint load_checkpoint(const std::string& dir);

// FNV-1a over the params.bin bytes; the determinism tests compare these.
std::uint64_t checkpoint_hash(const std::string& dir);

}  // namespace gve::diff
