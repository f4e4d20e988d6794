#include "gve/config.hpp"

#include <fstream>

namespace gve::cli {

const std::map<std::string, std::string>& RunConfig::default_table() {
  static const std::map<std::string, std::string> table = {
      {"run.seed", "1"},
      {"world.seed", "1000"},

      {"agent.variant", "GVE_MAML"},
      {"agent.z_dim", "16"},
      {"agent.enc_dim", "64"},
      {"agent.lstm_hidden", "64"},
      {"agent.adapt_hidden", "16"},

      {"gtn.mixtures", "2"},
      {"gtn.stages", "2"},
      {"gtn.conv_layers", "2"},
      {"gtn.hidden", "32"},
      {"gtn.q_dim", "32"},

      {"env.grid_min", "8"},
      {"env.grid_max", "12"},
      {"env.objects_min", "5"},
      {"env.objects_max", "8"},
      {"env.visibility_range", "5"},
      {"env.success_distance", "1"},
      {"env.attraction_prob", "0.8"},
      {"env.attraction_radius", "2"},
      {"env.max_steps_train", "50"},
      {"env.max_steps_test", "200"},
      {"env.houses_train", "20"},
      {"env.houses_val", "5"},
      {"env.houses_test", "5"},

      {"graph.views_per_house", "1000"},
      {"graph.threshold", "300"},

      {"train.gamma", "0.99"},
      {"train.entropy_weight", "0.01"},
      {"train.value_weight", "0.5"},
      {"train.lr", "7e-4"},
      {"train.clip", "10"},
      {"train.segment_len", "50"},
      {"train.workers", "4"},
      {"train.episodes", "50000"},
      {"train.checkpoint_every", "10000"},
      {"train.freeze_zero", ""},

      {"maml.inner_lr", "0.01"},
      {"maml.outer_lr", "7e-4"},
      {"maml.interval", "6"},
      {"maml.max_inner", "4"},
      {"maml.inner_clip", "1"},
      {"maml.fd_eps", "0.001"},

      {"eval.episodes", "200"},
      {"eval.seed", "7"},
      {"eval.split", "test"},
      {"eval.adapt", "auto"},
  };
  return table;
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  cfg.kv_ = default_table();
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!default_table().count(key)) throw ConfigError("unknown config key: " + key);
  kv_[key] = value;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto ke = key.find_last_not_of(" \t");
    key.resize(ke == std::string::npos ? 0 : ke + 1);
    const auto vb = value.find_first_not_of(" \t");
    value = vb == std::string::npos ? "" : value.substr(vb);
    set(key, value);
  }
}

void RunConfig::apply_override(const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value: " + key_eq_value);
  set(key_eq_value.substr(0, eq), key_eq_value.substr(eq + 1));
}

const std::string& RunConfig::str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

double RunConfig::num(const std::string& key) const {
  try {
    size_t pos = 0;
    const double v = std::stod(str(key), &pos);
    if (pos != str(key).size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + str(key));
  }
}

long RunConfig::integer(const std::string& key) const {
  try {
    size_t pos = 0;
    const long v = std::stol(str(key), &pos);
    if (pos != str(key).size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer: " + str(key));
  }
}

void RunConfig::write_resolved(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write resolved config to " + path);
  for (const auto& [key, value] : kv_) out << key << "=" << value << "\n";
}

agent::Variant RunConfig::variant() const {
  try {
    return agent::parse_variant(str("agent.variant"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

agent::AgentConfig RunConfig::agent_config(int n_objects) const {
  agent::AgentConfig cfg;
  cfg.n_objects = n_objects;
  cfg.obs_dim = env::Observation::feature_dim(n_objects);
  cfg.z_dim = static_cast<int>(integer("agent.z_dim"));
  cfg.enc_dim = static_cast<int>(integer("agent.enc_dim"));
  cfg.lstm_hidden = static_cast<int>(integer("agent.lstm_hidden"));
  cfg.adapt_hidden = static_cast<int>(integer("agent.adapt_hidden"));
  cfg.gtn.mixtures = static_cast<int>(integer("gtn.mixtures"));
  cfg.gtn.stages = static_cast<int>(integer("gtn.stages"));
  cfg.gtn.conv_layers = static_cast<int>(integer("gtn.conv_layers"));
  cfg.gtn.hidden_dim = static_cast<int>(integer("gtn.hidden"));
  cfg.gtn.q_dim = static_cast<int>(integer("gtn.q_dim"));
  cfg.variant = variant();
  return cfg;
}

env::EnvConfig RunConfig::env_config() const {
  env::EnvConfig cfg;
  cfg.grid_min = static_cast<int>(integer("env.grid_min"));
  cfg.grid_max = static_cast<int>(integer("env.grid_max"));
  cfg.objects_min = static_cast<int>(integer("env.objects_min"));
  cfg.objects_max = static_cast<int>(integer("env.objects_max"));
  cfg.visibility_range = num("env.visibility_range");
  cfg.success_distance = static_cast<int>(integer("env.success_distance"));
  cfg.attraction_prob = num("env.attraction_prob");
  cfg.attraction_radius = static_cast<int>(integer("env.attraction_radius"));
  cfg.max_steps_train = static_cast<int>(integer("env.max_steps_train"));
  cfg.max_steps_test = static_cast<int>(integer("env.max_steps_test"));
  cfg.houses_train = static_cast<int>(integer("env.houses_train"));
  cfg.houses_val = static_cast<int>(integer("env.houses_val"));
  cfg.houses_test = static_cast<int>(integer("env.houses_test"));
  return cfg;
}

train::A3CConfig RunConfig::a3c_config() const {
  train::A3CConfig cfg;
  cfg.gamma = num("train.gamma");
  cfg.entropy_weight = num("train.entropy_weight");
  cfg.value_weight = num("train.value_weight");
  cfg.lr = num("train.lr");
  cfg.clip = num("train.clip");
  cfg.segment_len = static_cast<int>(integer("train.segment_len"));
  cfg.workers = static_cast<int>(integer("train.workers"));
  cfg.episodes = integer("train.episodes");
  cfg.checkpoint_every = integer("train.checkpoint_every");
  return cfg;
}

train::MAMLConfig RunConfig::maml_config() const {
  train::MAMLConfig cfg;
  cfg.inner_lr = num("maml.inner_lr");
  cfg.outer_lr = num("maml.outer_lr");
  cfg.interval = static_cast<int>(integer("maml.interval"));
  cfg.max_inner = static_cast<int>(integer("maml.max_inner"));
  cfg.inner_clip = num("maml.inner_clip");
  cfg.fd_eps = num("maml.fd_eps");
  return cfg;
}

}  // namespace gve::cli
