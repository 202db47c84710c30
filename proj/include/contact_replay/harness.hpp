#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contact_replay/agent.hpp"
#include "contact_replay/config.hpp"
#include "contact_replay/core.hpp"
#include "contact_replay/env.hpp"
#include "contact_replay/prioritizers.hpp"
#include "contact_replay/rng.hpp"

namespace contact_replay {

inline constexpr std::string_view kMetricsHeader =
    "seed,epoch,success_rate,mean_abs_td,critic_loss,actor_loss,buffer_episodes,wall_clock_s";

struct MetricsRow {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double success_rate = 0.0;
  double mean_abs_td = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  std::size_t buffer_episodes = 0;
  double wall_clock_s = 0.0;
};

std::string format_metrics_row(const MetricsRow& row);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// Runs one episode. With trajectory_csv set, one row per step is written
// (t, gripper, object, goal, touch readings, reward) after a header line.
Episode rollout_episode(Env& env, const DdpgAgent& agent, std::uint64_t reset_seed, bool explore,
                        Rng& explore_rng, std::ostream* trajectory_csv = nullptr);

// Fraction of noise-free episodes whose final step has reward 0.
double evaluate_policy(Env& env, const DdpgAgent& agent, std::size_t episodes, Rng& eval_rng,
                       std::ostream* trajectory_csv = nullptr);

DdpgAgent make_agent(const RunConfig& config, Rng& init_rng);

// Training loop for a single seed. Owns its environment, buffer, prioritizer, agent
// and one generator per named stream derived from the seed.
class Trainer {
 public:
  Trainer(RunConfig config, std::uint64_t seed);

  // Rolls out one exploration episode, stores it and runs the configured
  // number of updates. Throws TrainingAborted on a non-finite update.
  void train_episode(double beta);
  MetricsRow run_epoch(std::size_t epoch);

  const RunConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const DdpgAgent& agent() const { return agent_; }
  DdpgAgent& agent() { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const Prioritizer& prioritizer() const { return prioritizer_; }
  std::size_t epochs_completed() const { return epochs_completed_; }

  void save_checkpoint(const std::filesystem::path& path) const;

 private:
  RunConfig config_;
  std::uint64_t seed_;
  Rng env_rng_;
  Rng explore_rng_;
  Rng relabel_rng_;
  Rng sample_rng_;
  Rng init_rng_;
  Rng eval_rng_;
  Env env_;
  DdpgAgent agent_;
  ReplayBuffer buffer_;
  Prioritizer prioritizer_;
  std::size_t epochs_completed_ = 0;
  // Update statistics accumulated since the last epoch row.
  double td_sum_ = 0.0;
  double critic_sum_ = 0.0;
  double actor_sum_ = 0.0;
  std::size_t update_count_ = 0;
  double start_time_ = 0.0;
};

struct LoadedCheckpoint {
  RunConfig config;
  std::uint64_t seed = 0;
  std::size_t epochs_completed = 0;
  DdpgAgent agent;
  std::map<std::string, std::string> rng_states;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path metrics_path(const std::filesystem::path& dir);
std::filesystem::path seed_metrics_path(const std::filesystem::path& dir, std::uint64_t seed);
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t seed);

// Trains every seed, writing per-seed metrics files (flushed row by row), a
// merged metrics.csv in seed order and a final checkpoint per seed.
std::vector<MetricsRow> train(const RunConfig& config, std::ostream* log = nullptr);

double evaluate(const std::filesystem::path& checkpoint, std::size_t episodes,
                std::uint64_t seed, std::ostream* trajectory_csv = nullptr);

// Linear-interpolation quantile (q in [0, 1]).
double quantile(std::vector<double> values, double q);

struct CurveSummary {
  std::string label;
  std::vector<std::size_t> epochs;
  Vec median;
  Vec q25;
  Vec q75;
  std::size_t seeds = 0;
};

// Per-epoch median and interquartile range of success rate across seeds.
CurveSummary summarize(std::string label, const std::vector<MetricsRow>& rows);

// First epoch whose median success reaches `threshold`, if any.
std::optional<std::size_t> first_crossing(const CurveSummary& curve, double threshold);

inline constexpr std::string_view kSweepHeader =
    "parameter,value,epoch,median_success,q25_success,q75_success,seeds";

// Trains once per value of `parameter` (all seeds) under
// output_dir/<parameter>=<value>/ and writes output_dir/sweep.csv.
std::vector<CurveSummary> sweep(const RunConfig& base, const std::string& parameter,
                                const std::vector<std::string>& values,
                                std::ostream* log = nullptr);

void write_sweep_csv(std::ostream& out, const std::string& parameter,
                     const std::vector<CurveSummary>& curves);

// Reads either a metrics CSV (one curve, labelled `label`) or a sweep CSV
// (one curve per value).
std::vector<CurveSummary> load_curves(const std::filesystem::path& path,
                                      const std::string& label);

// Median line plus shaded interquartile band per curve, as standalone SVG.
// Throws ConfigError when the curves do not share the same epochs.
void plot_svg(const std::vector<CurveSummary>& curves, std::ostream& out,
              const std::string& title = "success rate");

}  // namespace contact_replay
