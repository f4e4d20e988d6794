#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gve/adjacency.hpp"
#include "gve/features.hpp"
#include "gve/gridhouse.hpp"
#include "gve/gtn.hpp"
#include "gve/paramset.hpp"
#include "gve/tensor.hpp"
#include "gve/vocab.hpp"

namespace gve::agent {

// One row per ablation in the result tables.
enum class Variant {
  A3C,
  A3C_Graph_SS,
  A3C_MAML,
  Graph_MAML_SS,
  Graph_MAML_Action,
  GVE,
  GVE_MAML,
  GVE_LG,
  GVE_RandomGraph,
};

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

// Where the graph encoding enters the network: the critic only (the GVE
// design), appended to the state for both heads (SS), appended to the
// actor input (Action), or absent.
enum class GraphRole { None, Critic, State, Action };

GraphRole graph_role(Variant v);
bool uses_graph(Variant v);
bool uses_maml(Variant v);
bool language_only_graph(Variant v);
bool randomized_graph(Variant v);

struct AgentConfig {
  int n_objects = 20;
  int obs_dim = 68;
  int z_dim = 16;
  int enc_dim = 64;
  int lstm_hidden = 64;
  int adapt_hidden = 16;
  gtn::GtnConfig gtn;
  Variant variant = Variant::GVE_MAML;

  int node_feat_dim() const { return kg::kNodeSliceDim + z_dim; }
};

// Parameter name prefixes partition the set: embed./enc./lstm. form the
// backbone, actor. the policy head, critic. the value head (critic.Wq is
// the graph aggregation W1, critic.Wf the state aggregation W2), gtn. the
// graph encoder and adapt. the learned adaptation loss. The backbone plus
// actor is theta_total, the slice the meta inner updates touch.
diff::ParamSet init_params(const AgentConfig& cfg, std::uint64_t seed);

bool in_theta_total(const std::string& name);
bool is_adapt_param(const std::string& name);

struct StepOutput {
  diff::Tensor policy;      // {6} probabilities
  diff::Tensor log_policy;  // {6} stable log probabilities, same logits
  diff::Tensor value;       // {1}
  diff::Tensor h, c;        // next recurrent state
  diff::Tensor state;       // F, the lstm output
};

class PolicyNet {
 public:
  PolicyNet(const AgentConfig& cfg, const kg::ObjectVocabulary& vocab,
            const kg::AdjacencyTensor* adj);

  // Bind a parameter version; rebuilds the cached graph encoder, whose
  // normalized adjacencies depend only on parameters.
  void bind(const diff::ParamSet& params);
  const diff::ParamSet& params() const { return *params_; }

  StepOutput forward(const env::Observation& obs, const diff::Tensor& h,
                     const diff::Tensor& c) const;

  diff::LstmState initial_state() const;
  const AgentConfig& config() const { return cfg_; }
  const kg::ObjectVocabulary* vocab() const { return vocab_; }

 private:
  AgentConfig cfg_;
  const kg::ObjectVocabulary* vocab_;
  const kg::AdjacencyTensor* adj_;
  const diff::ParamSet* params_ = nullptr;
  std::optional<gtn::Encoder> encoder_;
};

// Mean-pooled (state, policy) window -> squared scalar; the learned
// test-time adaptation loss, differentiable in both phi and, through the
// window tensors, the policy parameters.
diff::Tensor adaptation_loss(const std::vector<diff::Tensor>& states,
                             const std::vector<diff::Tensor>& policies,
                             const diff::ParamSet& params);

}  // namespace gve::agent
