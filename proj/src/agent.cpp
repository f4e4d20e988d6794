#include "gve/agent.hpp"

#include <stdexcept>

#include "gve/rng.hpp"

namespace gve::agent {

using diff::ParamSet;
using diff::Tensor;

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::A3C: return "A3C";
    case Variant::A3C_Graph_SS: return "A3C_Graph_SS";
    case Variant::A3C_MAML: return "A3C_MAML";
    case Variant::Graph_MAML_SS: return "Graph_MAML_SS";
    case Variant::Graph_MAML_Action: return "Graph_MAML_Action";
    case Variant::GVE: return "GVE";
    case Variant::GVE_MAML: return "GVE_MAML";
    case Variant::GVE_LG: return "GVE_LG";
    case Variant::GVE_RandomGraph: return "GVE_RandomGraph";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::A3C, Variant::A3C_Graph_SS, Variant::A3C_MAML,
                    Variant::Graph_MAML_SS, Variant::Graph_MAML_Action, Variant::GVE,
                    Variant::GVE_MAML, Variant::GVE_LG, Variant::GVE_RandomGraph})
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown agent variant: " + name);
}

GraphRole graph_role(Variant v) {
  switch (v) {
    case Variant::A3C:
    case Variant::A3C_MAML:
      return GraphRole::None;
    case Variant::A3C_Graph_SS:
    case Variant::Graph_MAML_SS:
      return GraphRole::State;
    case Variant::Graph_MAML_Action:
      return GraphRole::Action;
    case Variant::GVE:
    case Variant::GVE_MAML:
    case Variant::GVE_LG:
    case Variant::GVE_RandomGraph:
      return GraphRole::Critic;
  }
  return GraphRole::None;
}

bool uses_graph(Variant v) { return graph_role(v) != GraphRole::None; }

bool uses_maml(Variant v) {
  switch (v) {
    case Variant::A3C_MAML:
    case Variant::Graph_MAML_SS:
    case Variant::Graph_MAML_Action:
    case Variant::GVE_MAML:
    case Variant::GVE_LG:
    case Variant::GVE_RandomGraph:
      return true;
    default:
      return false;
  }
}

bool language_only_graph(Variant v) { return v == Variant::GVE_LG; }
bool randomized_graph(Variant v) { return v == Variant::GVE_RandomGraph; }

ParamSet init_params(const AgentConfig& cfg, std::uint64_t seed) {
  // Every tensor is seeded from (seed, name), so variants sharing a
  // parameter name draw identical values. The bit-exact reduction tests
  // between variants depend on this.
  auto named = [seed](const std::string& name) { return mix_seed(seed, fnv1a64(name)); };
  auto uniform = [&](const std::string& name, diff::Shape shape, int fan_in) {
    return diff::init_uniform_fanin(std::move(shape), fan_in, named(name));
  };

  ParamSet p;
  const GraphRole role = graph_role(cfg.variant);
  const int q = cfg.gtn.q_dim;

  p.insert("embed.table", uniform("embed.table", {cfg.n_objects, cfg.z_dim}, cfg.z_dim));
  const int enc_in = cfg.obs_dim + cfg.z_dim;
  p.insert("enc.W", uniform("enc.W", {cfg.enc_dim, enc_in}, enc_in));
  p.insert("enc.b", uniform("enc.b", {cfg.enc_dim}, enc_in));
  p.insert("lstm.W_ih",
           uniform("lstm.W_ih", {4 * cfg.lstm_hidden, cfg.enc_dim}, cfg.enc_dim));
  p.insert("lstm.W_hh",
           uniform("lstm.W_hh", {4 * cfg.lstm_hidden, cfg.lstm_hidden}, cfg.lstm_hidden));
  p.insert("lstm.b", uniform("lstm.b", {4 * cfg.lstm_hidden}, cfg.lstm_hidden));

  const int actor_in =
      cfg.lstm_hidden + ((role == GraphRole::State || role == GraphRole::Action) ? q : 0);
  p.insert("actor.W", uniform("actor.W", {env::kActionCount, actor_in}, actor_in));
  p.insert("actor.b", uniform("actor.b", {env::kActionCount}, actor_in));

  const int critic_f_in = cfg.lstm_hidden + (role == GraphRole::State ? q : 0);
  p.insert("critic.Wf", uniform("critic.Wf", {1, critic_f_in}, critic_f_in));
  p.insert("critic.b", uniform("critic.b", {1}, critic_f_in));
  if (role == GraphRole::Critic)
    p.insert("critic.Wq", uniform("critic.Wq", {1, q}, q));

  if (uses_graph(cfg.variant))
    add_gtn_params(p, cfg.gtn, kg::kRoomCount + 1, cfg.node_feat_dim(), seed);

  if (uses_maml(cfg.variant)) {
    const int adapt_in = cfg.lstm_hidden + env::kActionCount;
    p.insert("adapt.W1", uniform("adapt.W1", {cfg.adapt_hidden, adapt_in}, adapt_in));
    p.insert("adapt.b1", uniform("adapt.b1", {cfg.adapt_hidden}, adapt_in));
    p.insert("adapt.w2", uniform("adapt.w2", {1, cfg.adapt_hidden}, cfg.adapt_hidden));
    p.insert("adapt.b2", uniform("adapt.b2", {1}, cfg.adapt_hidden));
  }
  return p;
}

bool in_theta_total(const std::string& name) {
  return name.rfind("embed.", 0) == 0 || name.rfind("enc.", 0) == 0 ||
         name.rfind("lstm.", 0) == 0 || name.rfind("actor.", 0) == 0;
}

bool is_adapt_param(const std::string& name) { return name.rfind("adapt.", 0) == 0; }

PolicyNet::PolicyNet(const AgentConfig& cfg, const kg::ObjectVocabulary& vocab,
                     const kg::AdjacencyTensor* adj)
    : cfg_(cfg), vocab_(&vocab), adj_(adj) {
  if (uses_graph(cfg.variant) && !adj)
    throw std::invalid_argument("PolicyNet: variant needs an adjacency tensor");
}

void PolicyNet::bind(const ParamSet& params) {
  params_ = &params;
  if (uses_graph(cfg_.variant)) encoder_.emplace(cfg_.gtn, *adj_, params);
}

diff::LstmState PolicyNet::initial_state() const {
  return {Tensor::zeros({cfg_.lstm_hidden}), Tensor::zeros({cfg_.lstm_hidden})};
}

StepOutput PolicyNet::forward(const env::Observation& obs, const Tensor& h,
                              const Tensor& c) const {
  if (!params_) throw std::logic_error("PolicyNet: forward before bind");
  const ParamSet& p = *params_;
  const GraphRole role = graph_role(cfg_.variant);

  const Tensor& table = p.at("embed.table");
  Tensor z = diff::reshape(diff::slice(table, 0, obs.target, 1), {cfg_.z_dim});
  Tensor x = diff::concat({Tensor::constant({cfg_.obs_dim}, obs.features()), z}, 0);
  Tensor e = diff::relu(diff::add(diff::matmul(p.at("enc.W"), x), p.at("enc.b")));
  auto [h_next, c_next] =
      diff::lstm_step(e, h, c, p.at("lstm.W_ih"), p.at("lstm.W_hh"), p.at("lstm.b"));
  const Tensor& state = h_next;

  Tensor q;
  if (role != GraphRole::None) {
    Tensor nodes = language_only_graph(cfg_.variant)
                       ? kg::language_only_features(*vocab_, table)
                       : kg::assemble_node_features(obs, *vocab_, table);
    q = encoder_->encode(nodes);
  }

  Tensor actor_in = (role == GraphRole::State || role == GraphRole::Action)
                        ? diff::concat({state, q}, 0)
                        : state;
  Tensor logits = diff::add(diff::matmul(p.at("actor.W"), actor_in), p.at("actor.b"));
  Tensor policy = diff::softmax(logits);
  Tensor log_policy = diff::log_softmax(logits);

  Tensor value;
  if (role == GraphRole::Critic) {
    // V = W1 Q + W2 F (+ bias); one linear layer over the concatenation
    // is the same map, kept split so the aggregation weights stay named.
    value = diff::add(diff::add(diff::matmul(p.at("critic.Wq"), q),
                                diff::matmul(p.at("critic.Wf"), state)),
                      p.at("critic.b"));
  } else {
    Tensor critic_in = role == GraphRole::State ? diff::concat({state, q}, 0) : state;
    value = diff::add(diff::matmul(p.at("critic.Wf"), critic_in), p.at("critic.b"));
  }

  return {policy, log_policy, value, h_next, c_next, state};
}

Tensor adaptation_loss(const std::vector<Tensor>& states, const std::vector<Tensor>& policies,
                       const ParamSet& params) {
  if (states.empty() || states.size() != policies.size())
    throw std::invalid_argument("adaptation_loss: window is empty or ragged");
  Tensor pooled;
  for (size_t i = 0; i < states.size(); ++i) {
    Tensor step = diff::concat({states[i], policies[i]}, 0);
    pooled = pooled.defined() ? diff::add(pooled, step) : step;
  }
  pooled = diff::scale(pooled, 1.0 / static_cast<double>(states.size()));
  Tensor hidden = diff::relu(
      diff::add(diff::matmul(params.at("adapt.W1"), pooled), params.at("adapt.b1")));
  Tensor out =
      diff::add(diff::matmul(params.at("adapt.w2"), hidden), params.at("adapt.b2"));
  return diff::mul(out, out);
}

}  // namespace gve::agent
