#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "contact_replay/agent.hpp"
#include "contact_replay/env.hpp"
#include "contact_replay/her.hpp"
#include "contact_replay/prioritizers.hpp"

namespace contact_replay {

// Flat dotted-key view of a configuration file:
//
//   # comment
//   [prioritizer]
//   kind = cebp
//   sigmoid.T = 0.01
//   agent.gamma = 0.98
//
// Section headers prefix the keys below them ("prioritizer.kind").
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(std::string_view text);
ConfigMap read_config_file(const std::filesystem::path& path);
// Applies a "key=value" override.
void apply_override(ConfigMap& map, std::string_view assignment);

struct RunConfig {
  EnvConfig env = EnvConfig::defaults(Task::push);
  AgentConfig agent;
  RelabelConfig her;
  PrioritizerKind prioritizer;
  double beta0 = 0.4;
  double beta_final = 1.0;
  std::size_t epochs = 50;
  std::size_t cycles_per_epoch = 50;
  std::size_t episodes_per_cycle = 2;
  std::size_t eval_episodes = 20;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "runs";
  std::size_t buffer_capacity = 5000;
  // When false the wall_clock_s column is written as 0 so that metrics files
  // are byte-identical across repeated runs.
  bool record_wall_clock = true;
  bool save_buffer = false;
  std::size_t jobs = 1;

  void validate() const;

  // Every key with its current value; parse_run_config(to_map()) reproduces
  // the configuration exactly.
  ConfigMap to_map() const;
  std::string to_text() const;
};

// Builds a run configuration from defaults plus the given keys. Unknown keys
// raise ConfigError naming the valid ones.
RunConfig parse_run_config(const ConfigMap& map);

const std::vector<std::string>& config_keys();

// Default output directory: $CONTACT_REPLAY_OUT if set, else "runs".
std::filesystem::path default_output_dir();

std::string format_double(double value);

}  // namespace contact_replay
