#include "contact_replay/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "contact_replay/errors.hpp"

namespace contact_replay {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, std::string_view s) {
  const std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": expected a number, got '" + t + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, std::string_view s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

bool to_bool(const std::string& key, std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + t + "'");
}

Vec3 to_vec3(const std::string& key, std::string_view s) {
  const auto items = split_list(s);
  if (items.size() != 3) throw ConfigError(key + ": expected 3 comma-separated numbers");
  return {to_double(key, items[0]), to_double(key, items[1]), to_double(key, items[2])};
}

Box3 to_box(const std::string& key, std::string_view s) {
  const auto items = split_list(s);
  if (items.size() != 6) {
    throw ConfigError(key + ": expected 6 comma-separated numbers (lo xyz, hi xyz)");
  }
  Box3 b;
  for (int i = 0; i < 3; ++i) {
    b.lo[i] = to_double(key, items[i]);
    b.hi[i] = to_double(key, items[i + 3]);
  }
  return b;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_vec3(const Vec3& v) {
  return format_double(v[0]) + "," + format_double(v[1]) + "," + format_double(v[2]);
}

std::string fmt_box(const Box3& b) { return fmt_vec3(b.lo) + "," + fmt_vec3(b.hi); }

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

struct KeySpec {
  std::string key;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CR_DOUBLE(KEY, FIELD)                                                              \
  KeySpec {                                                                                \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) {                    \
      c.FIELD = to_double(k, v);                                                           \
    },                                                                                     \
        [](const RunConfig& c) { return format_double(c.FIELD); }                          \
  }
#define CR_SIZE(KEY, FIELD)                                                                \
  KeySpec {                                                                                \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) {                    \
      c.FIELD = static_cast<decltype(c.FIELD)>(to_uint(k, v));                             \
    },                                                                                     \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                         \
  }
#define CR_BOOL(KEY, FIELD)                                                                \
  KeySpec {                                                                                \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) {                    \
      c.FIELD = to_bool(k, v);                                                             \
    },                                                                                     \
        [](const RunConfig& c) { return fmt_bool(c.FIELD); }                               \
  }
#define CR_BOX(KEY, FIELD)                                                                 \
  KeySpec {                                                                                \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) {                    \
      c.FIELD = to_box(k, v);                                                              \
    },                                                                                     \
        [](const RunConfig& c) { return fmt_box(c.FIELD); }                                \
  }

// env.task is applied before every other key because it selects the
// task-specific geometry defaults.
const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      KeySpec{"env.task",
              [](RunConfig& c, const std::string&, const std::string& v) {
                c.env = EnvConfig::defaults(parse_task(trim(v)));
              },
              [](const RunConfig& c) { return std::string(task_name(c.env.task)); }},
      CR_DOUBLE("env.dt", env.dt),
      CR_SIZE("env.horizon", env.horizon),
      CR_DOUBLE("env.success_threshold", env.success_threshold),
      CR_DOUBLE("env.contact_stiffness", env.contact_stiffness),
      CR_DOUBLE("env.object_side", env.object_side),
      CR_BOX("env.workspace", env.workspace),
      CR_BOX("env.gripper_bounds", env.gripper_bounds),
      CR_BOX("env.object_region", env.object_region),
      CR_BOX("env.goal_region", env.goal_region),
      KeySpec{"env.gripper_start",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                c.env.gripper_start = to_vec3(k, v);
              },
              [](const RunConfig& c) { return fmt_vec3(c.env.gripper_start); }},
      CR_DOUBLE("env.friction_coeff", env.friction_coeff),
      CR_DOUBLE("env.max_step", env.max_step),
      CR_DOUBLE("env.gap_max", env.gap_max),
      CR_DOUBLE("env.finger_width", env.finger_width),
      CR_DOUBLE("env.finger_height", env.finger_height),
      CR_SIZE("env.substeps", env.substeps),
      CR_DOUBLE("env.impulse_gain", env.impulse_gain),
      CR_DOUBLE("env.gravity", env.gravity),
      CR_DOUBLE("env.hold_depth", env.hold_depth),
      CR_DOUBLE("env.start_clearance", env.start_clearance),
      CR_SIZE("env.rng_seed", env.rng_seed),

      CR_DOUBLE("agent.gamma", agent.gamma),
      CR_DOUBLE("agent.tau", agent.tau),
      CR_DOUBLE("agent.action_noise_std", agent.action_noise_std),
      CR_DOUBLE("agent.random_action_prob", agent.random_action_prob),
      CR_SIZE("agent.batch_size", agent.batch_size),
      CR_SIZE("agent.updates_per_episode", agent.updates_per_episode),
      KeySpec{"agent.hidden",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                c.agent.hidden.clear();
                for (const auto& item : split_list(v)) {
                  c.agent.hidden.push_back(static_cast<std::size_t>(to_uint(k, item)));
                }
              },
              [](const RunConfig& c) { return fmt_list(c.agent.hidden); }},
      CR_DOUBLE("agent.actor_lr", agent.actor_lr),
      CR_DOUBLE("agent.critic_lr", agent.critic_lr),
      CR_BOOL("agent.clip_target", agent.clip_target),
      CR_BOOL("agent.normalize", agent.normalize),
      CR_DOUBLE("agent.norm_clip", agent.norm_clip),
      CR_DOUBLE("agent.action_l2", agent.action_l2),

      KeySpec{"her.strategy",
              [](RunConfig& c, const std::string&, const std::string& v) {
                c.her.strategy = parse_relabel_strategy(trim(v));
              },
              [](const RunConfig& c) { return std::string(relabel_strategy_name(c.her.strategy)); }},
      KeySpec{"her.replay_k",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                c.her.replay_k = static_cast<int>(to_uint(k, v));
              },
              [](const RunConfig& c) { return std::to_string(c.her.replay_k); }},

      KeySpec{"prioritizer.kind",
              [](RunConfig& c, const std::string&, const std::string& v) {
                c.prioritizer.type = parse_prioritizer(trim(v));
              },
              [](const RunConfig& c) { return std::string(prioritizer_name(c.prioritizer.type)); }},
      CR_DOUBLE("prioritizer.sigmoid.k", prioritizer.sigmoid.k),
      CR_DOUBLE("prioritizer.sigmoid.T", prioritizer.sigmoid.temperature),
      CR_DOUBLE("prioritizer.per.alpha", prioritizer.per_alpha),
      CR_DOUBLE("prioritizer.beta0", beta0),
      CR_DOUBLE("prioritizer.beta_final", beta_final),
      CR_DOUBLE("prioritizer.epsilon_floor", prioritizer.epsilon_floor),
      CR_DOUBLE("prioritizer.ebp.mass", prioritizer.ebp_mass),
      CR_DOUBLE("prioritizer.ebp.gravity", prioritizer.ebp_gravity),
      CR_BOOL("cebp.per_step_energy", prioritizer.per_step_energy),

      CR_SIZE("run.epochs", epochs),
      CR_SIZE("run.cycles_per_epoch", cycles_per_epoch),
      CR_SIZE("run.episodes_per_cycle", episodes_per_cycle),
      CR_SIZE("run.eval_episodes", eval_episodes),
      KeySpec{"run.seeds",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                c.seeds.clear();
                for (const auto& item : split_list(v)) c.seeds.push_back(to_uint(k, item));
              },
              [](const RunConfig& c) { return fmt_list(c.seeds); }},
      KeySpec{"run.output_dir",
              [](RunConfig& c, const std::string&, const std::string& v) {
                c.output_dir = trim(v);
              },
              [](const RunConfig& c) { return c.output_dir.string(); }},
      CR_SIZE("run.buffer_capacity", buffer_capacity),
      CR_BOOL("run.record_wall_clock", record_wall_clock),
      CR_BOOL("run.save_buffer", save_buffer),
      CR_SIZE("run.jobs", jobs),
  };
  return specs;
}

#undef CR_DOUBLE
#undef CR_SIZE
#undef CR_BOOL
#undef CR_BOX

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

ConfigMap parse_config_text(std::string_view text) {
  ConfigMap map;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    map[key] = value;
  }
  return map;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_override(ConfigMap& map, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override has an empty key");
  map[key] = trim(assignment.substr(eq + 1));
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : key_specs()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("CONTACT_REPLAY_OUT"); env && *env) return env;
  return "runs";
}

RunConfig parse_run_config(const ConfigMap& map) {
  RunConfig c;
  c.output_dir = default_output_dir();
  const auto& specs = key_specs();
  for (const auto& [key, value] : map) {
    const bool known = std::any_of(specs.begin(), specs.end(),
                                   [&](const KeySpec& s) { return s.key == key; });
    if (!known) {
      std::string valid;
      for (const auto& s : specs) valid += "\n  " + s.key;
      throw ConfigError("unknown config key '" + key + "'; valid keys:" + valid);
    }
  }
  for (const auto& spec : specs) {
    auto it = map.find(spec.key);
    if (it != map.end()) spec.set(c, spec.key, it->second);
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  env.validate();
  agent.validate();
  her.validate();
  prioritizer.validate();
  if (!(beta0 >= 0.0 && beta0 <= 1.0) || !(beta_final >= 0.0 && beta_final <= 1.0)) {
    throw ConfigError("prioritizer.beta0 and prioritizer.beta_final must lie in [0, 1]");
  }
  if (cycles_per_epoch == 0 || episodes_per_cycle == 0) {
    throw ConfigError("run.cycles_per_epoch and run.episodes_per_cycle must be positive");
  }
  if (eval_episodes == 0) throw ConfigError("run.eval_episodes must be positive");
  if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
  std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw ConfigError("run.seeds must be distinct");
  if (buffer_capacity == 0) throw ConfigError("run.buffer_capacity must be positive");
  if (jobs == 0) throw ConfigError("run.jobs must be positive");
}

ConfigMap RunConfig::to_map() const {
  ConfigMap map;
  for (const auto& spec : key_specs()) map[spec.key] = spec.get(*this);
  return map;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& spec : key_specs()) out += spec.key + " = " + spec.get(*this) + "\n";
  return out;
}

}  // namespace contact_replay
