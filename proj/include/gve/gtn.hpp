#pragma once

#include <cstdint>
#include <vector>

#include "gve/adjacency.hpp"
#include "gve/paramset.hpp"
#include "gve/tensor.hpp"

namespace gve::gtn {

struct GtnConfig {
  int mixtures = 2;     // parallel channel-mix tracks per stage (L)
  int stages = 2;       // composed adjacency factors per track (M)
  int conv_layers = 2;  // graph convolutions applied per track
  int hidden_dim = 32;  // node embedding width inside the convolutions
  int q_dim = 32;       // output graph representation width
};

// Parameter names carry the "gtn." prefix: per-track, per-stage channel-mix
// logits, shared per-layer convolution weights, and the output projection.
void add_gtn_params(diff::ParamSet& params, const GtnConfig& cfg, int channels,
                    int feat_dim, std::uint64_t seed);

// H = sum_c softmax(logits)_c * A[:,:,c] -- soft channel average.
diff::Tensor channel_mix(const kg::AdjacencyTensor& adj, const diff::Tensor& logits);

// Left-to-right product of the mixed adjacencies; encodes multi-hop paths.
diff::Tensor compose_adjacency(const std::vector<diff::Tensor>& mixes);

// relu(rownorm(a_new + I) * (nodes * w_n)); rownorm(a_new + I) is
// row-stochastic because the identity keeps every row sum >= 1.
diff::Tensor graph_convolve(const diff::Tensor& a_new, const diff::Tensor& nodes,
                            const diff::Tensor& w_n);

// The composed, degree-normalized adjacencies depend only on the mix logits,
// not on the observation, so an Encoder built once per parameter version
// amortizes them across every step of an episode.
class Encoder {
 public:
  Encoder(const GtnConfig& cfg, const kg::AdjacencyTensor& adj,
          const diff::ParamSet& params);

  // Mean-pooled, projected graph representation of shape {q_dim}.
  diff::Tensor encode(const diff::Tensor& node_features) const;

  const diff::Tensor& normalized_adjacency(int track) const {
    return norm_adj_[static_cast<size_t>(track)];
  }

 private:
  GtnConfig cfg_;
  std::vector<diff::Tensor> norm_adj_;  // one per track
  std::vector<diff::Tensor> conv_w_;    // shared across tracks
  diff::Tensor proj_w_, proj_b_;
};

// One-shot convenience over Encoder.
diff::Tensor encode_graph(const kg::AdjacencyTensor& adj, const diff::Tensor& nodes,
                          const diff::ParamSet& params, const GtnConfig& cfg);

}  // namespace gve::gtn
