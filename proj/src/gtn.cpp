#include "gve/gtn.hpp"

#include <stdexcept>
#include <string>

#include "gve/rng.hpp"

namespace gve::gtn {

using diff::ParamSet;
using diff::Tensor;

namespace {

std::string mix_name(int track, int stage) {
  return "gtn.mix." + std::to_string(track) + "." + std::to_string(stage);
}

std::string conv_name(int layer) { return "gtn.conv." + std::to_string(layer) + ".W"; }

}  // namespace

void add_gtn_params(ParamSet& params, const GtnConfig& cfg, int channels, int feat_dim,
                    std::uint64_t seed) {
  auto named_seed = [seed](const std::string& name) {
    return mix_seed(seed, fnv1a64(name));
  };
  for (int l = 0; l < cfg.mixtures; ++l)
    for (int i = 0; i < cfg.stages; ++i) {
      const std::string name = mix_name(l, i);
      params.insert(name, diff::init_uniform_fanin({channels}, channels, named_seed(name)));
    }
  for (int j = 0; j < cfg.conv_layers; ++j) {
    const std::string name = conv_name(j);
    const int in_dim = j == 0 ? feat_dim : cfg.hidden_dim;
    params.insert(name, diff::init_uniform_fanin({in_dim, cfg.hidden_dim}, in_dim,
                                                 named_seed(name)));
  }
  const int pooled = cfg.mixtures * cfg.hidden_dim;
  params.insert("gtn.proj.W",
                diff::init_uniform_fanin({cfg.q_dim, pooled}, pooled, named_seed("gtn.proj.W")));
  params.insert("gtn.proj.b",
                diff::init_uniform_fanin({cfg.q_dim}, pooled, named_seed("gtn.proj.b")));
}

Tensor channel_mix(const kg::AdjacencyTensor& adj, const Tensor& logits) {
  if (logits.shape() != diff::Shape{adj.channels()})
    throw std::invalid_argument("channel_mix: logits shape " +
                                diff::shape_str(logits.shape()) + " vs " +
                                std::to_string(adj.channels()) + " channels");
  Tensor weights = diff::softmax(logits);
  const int n = adj.nodes();
  Tensor mixed;
  for (int c = 0; c < adj.channels(); ++c) {
    Tensor w_c = diff::reshape(diff::slice(weights, 0, c, 1), {1, 1});
    Tensor channel = Tensor::constant({n, n}, adj.channel(c));
    // w_c broadcast as a rank-1 outer product against a ones row.
    Tensor scaled = diff::matmul(diff::matmul(Tensor::full({n, 1}, 1.0), w_c),
                                 Tensor::full({1, n}, 1.0));
    Tensor term = diff::mul(scaled, channel);
    mixed = mixed.defined() ? diff::add(mixed, term) : term;
  }
  return mixed;
}

Tensor compose_adjacency(const std::vector<Tensor>& mixes) {
  if (mixes.empty()) throw std::invalid_argument("compose_adjacency: no factors");
  Tensor out = mixes[0];
  for (size_t i = 1; i < mixes.size(); ++i) out = diff::matmul(out, mixes[i]);
  return out;
}

namespace {

Tensor normalized_augmented(const Tensor& a_new) {
  const int n = a_new.shape()[0];
  return diff::row_normalize(diff::add(a_new, Tensor::identity(n)));
}

}  // namespace

Tensor graph_convolve(const Tensor& a_new, const Tensor& nodes, const Tensor& w_n) {
  return diff::relu(diff::matmul(normalized_augmented(a_new), diff::matmul(nodes, w_n)));
}

Encoder::Encoder(const GtnConfig& cfg, const kg::AdjacencyTensor& adj, const ParamSet& params)
    : cfg_(cfg) {
  for (int l = 0; l < cfg.mixtures; ++l) {
    std::vector<Tensor> factors;
    for (int i = 0; i < cfg.stages; ++i)
      factors.push_back(channel_mix(adj, params.at(mix_name(l, i))));
    norm_adj_.push_back(normalized_augmented(compose_adjacency(factors)));
  }
  for (int j = 0; j < cfg.conv_layers; ++j) conv_w_.push_back(params.at(conv_name(j)));
  proj_w_ = params.at("gtn.proj.W");
  proj_b_ = params.at("gtn.proj.b");
}

Tensor Encoder::encode(const Tensor& node_features) const {
  std::vector<Tensor> pooled;
  for (const Tensor& norm : norm_adj_) {
    Tensor x = node_features;
    for (const Tensor& w : conv_w_) x = diff::relu(diff::matmul(norm, diff::matmul(x, w)));
    pooled.push_back(diff::mean_rows(x));
  }
  Tensor joined = pooled.size() == 1 ? pooled[0] : diff::concat(pooled, 0);
  return diff::add(diff::matmul(proj_w_, joined), proj_b_);
}

Tensor encode_graph(const kg::AdjacencyTensor& adj, const Tensor& nodes,
                    const ParamSet& params, const GtnConfig& cfg) {
  return Encoder(cfg, adj, params).encode(nodes);
}

}  // namespace gve::gtn
