#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "gve/agent.hpp"
#include "gve/gridhouse.hpp"
#include "gve/trainer.hpp"

namespace gve::cli {

// Config problems exit with code 2, runtime contract violations with 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration. Every tunable lives in one defaults table;
// files and command-line overrides may only touch known keys, and the fully
// resolved set is echoed into each run directory.
class RunConfig {
 public:
  static RunConfig defaults();
  static const std::map<std::string, std::string>& default_table();

  void set(const std::string& key, const std::string& value);  // unknown -> ConfigError
  void load_file(const std::string& path);
  void apply_override(const std::string& key_eq_value);  // "key=value"

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  long integer(const std::string& key) const;

  void write_resolved(const std::string& path) const;

  agent::Variant variant() const;
  agent::AgentConfig agent_config(int n_objects) const;
  env::EnvConfig env_config() const;
  train::A3CConfig a3c_config() const;
  train::MAMLConfig maml_config() const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace gve::cli
