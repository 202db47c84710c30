#include "contact_replay/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "contact_replay/binary_io.hpp"
#include "contact_replay/errors.hpp"
#include "contact_replay/her.hpp"

namespace contact_replay {

namespace {

constexpr std::string_view kCheckpointMagic = "CRCKPT";
constexpr std::uint32_t kCheckpointFormatVersion = 1;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_trajectory_header(std::ostream& out) {
  out << "t,gripper_x,gripper_y,gripper_z,object_x,object_y,object_z,goal_x,goal_y,goal_z,"
         "touch_left,touch_right,reward\n";
}

void write_trajectory_row(std::ostream& out, std::size_t t, const EnvState& s,
                          const StepResult& r) {
  out << t;
  for (double v : s.gripper_pos) out << ',' << fmt(v);
  for (double v : s.object_pos) out << ',' << fmt(v);
  for (double v : s.goal) out << ',' << fmt(v);
  out << ',' << fmt(r.touch_left) << ',' << fmt(r.touch_right) << ',' << fmt(r.reward) << '\n';
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string format_metrics_row(const MetricsRow& row) {
  return std::to_string(row.seed) + "," + std::to_string(row.epoch) + "," +
         fmt(row.success_rate) + "," + fmt(row.mean_abs_td) + "," + fmt(row.critic_loss) + "," +
         fmt(row.actor_loss) + "," + std::to_string(row.buffer_episodes) + "," +
         fmt(row.wall_clock_s);
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw IoError(path.string() + ": not a metrics file (unexpected header)");
  }
  std::vector<MetricsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 8) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 8 columns");
    }
    try {
      MetricsRow r;
      r.seed = std::stoull(f[0]);
      r.epoch = std::stoull(f[1]);
      r.success_rate = std::stod(f[2]);
      r.mean_abs_td = std::stod(f[3]);
      r.critic_loss = std::stod(f[4]);
      r.actor_loss = std::stod(f[5]);
      r.buffer_episodes = std::stoull(f[6]);
      r.wall_clock_s = std::stod(f[7]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

Episode rollout_episode(Env& env, const DdpgAgent& agent, std::uint64_t reset_seed, bool explore,
                        Rng& explore_rng, std::ostream* trajectory_csv) {
  Observation obs = env.reset(reset_seed);
  const std::size_t horizon = env.config().horizon;
  Episode ep;
  ep.transitions.reserve(horizon);
  if (trajectory_csv) write_trajectory_header(*trajectory_csv);
  for (std::size_t t = 0; t < horizon; ++t) {
    Vec action = agent.act(obs.vector, obs.desired_goal, explore, explore_rng);
    StepResult r = env.step(action);
    if (trajectory_csv) write_trajectory_row(*trajectory_csv, t, env.state(), r);
    Transition tr;
    tr.state = std::move(obs.vector);
    tr.action = std::move(action);
    tr.reward = r.reward;
    tr.next_state = r.observation.vector;
    tr.desired_goal = std::move(obs.desired_goal);
    tr.achieved_goal = r.observation.achieved_goal;
    tr.touch_left = r.touch_left;
    tr.touch_right = r.touch_right;
    tr.object_displacement = r.object_displacement;
    ep.transitions.push_back(std::move(tr));
    obs = std::move(r.observation);
  }
  ep.cumulative_contact_energy = contact_energy(ep.transitions);
  return ep;
}

double evaluate_policy(Env& env, const DdpgAgent& agent, std::size_t episodes, Rng& eval_rng,
                       std::ostream* trajectory_csv) {
  if (episodes == 0) throw ConfigError("evaluation needs at least one episode");
  std::size_t successes = 0;
  for (std::size_t i = 0; i < episodes; ++i) {
    const std::uint64_t reset_seed = eval_rng();
    const Episode ep = rollout_episode(env, agent, reset_seed, false, eval_rng, trajectory_csv);
    if (ep.transitions.back().reward == 0.0) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(episodes);
}

DdpgAgent make_agent(const RunConfig& config, Rng& init_rng) {
  return DdpgAgent(config.agent, obs_layout::kSize, obs_layout::kGoalSize,
                   obs_layout::kActionSize, config.env.horizon, init_rng);
}

Trainer::Trainer(RunConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      seed_(seed),
      env_rng_(make_stream(seed, "env")),
      explore_rng_(make_stream(seed, "explore")),
      relabel_rng_(make_stream(seed, "relabel")),
      sample_rng_(make_stream(seed, "sample")),
      init_rng_(make_stream(seed, "init")),
      eval_rng_(make_stream(seed, "eval")),
      env_(config_.env),
      agent_(make_agent(config_, init_rng_)),
      buffer_(config_.env.horizon, config_.buffer_capacity),
      prioritizer_(config_.prioritizer),
      start_time_(now_seconds()) {
  config_.validate();
}

void Trainer::train_episode(double beta) {
  Episode ep = rollout_episode(env_, agent_, env_rng_(), true, explore_rng_);
  prioritizer_.prepare(ep);
  agent_.observe_episode(ep);
  buffer_.store_episode(std::move(ep));

  const bool per = config_.prioritizer.type == PrioritizerType::per;
  std::vector<TdSample> deltas;
  for (std::size_t u = 0; u < config_.agent.updates_per_episode; ++u) {
    const SampleBatch batch =
        prioritizer_.sample(buffer_, config_.agent.batch_size, beta, sample_rng_);
    const std::vector<Transition> transitions = relabel_minibatch_indices(
        buffer_, batch.indices, config_.her, config_.env.success_threshold, relabel_rng_);
    const UpdateStats stats = agent_.update(batch, transitions);
    if (!stats.finite) {
      throw TrainingAborted("non-finite training signal at seed " + std::to_string(seed_) +
                            ", epoch " + std::to_string(epochs_completed_) +
                            " (critic loss " + fmt(stats.critic_loss) + ", actor loss " +
                            fmt(stats.actor_loss) + ")");
    }
    td_sum_ += stats.mean_abs_td;
    critic_sum_ += stats.critic_loss;
    actor_sum_ += stats.actor_loss;
    ++update_count_;
    if (per) {
      deltas.clear();
      for (std::size_t j = 0; j < batch.indices.size(); ++j) {
        deltas.push_back({batch.indices[j].episode, stats.abs_td[j]});
      }
      prioritizer_.td_error_priority(buffer_, deltas);
    }
  }
}

MetricsRow Trainer::run_epoch(std::size_t epoch) {
  const double beta = beta_schedule(config_.beta0, config_.beta_final, epoch, config_.epochs);
  for (std::size_t c = 0; c < config_.cycles_per_epoch; ++c) {
    for (std::size_t e = 0; e < config_.episodes_per_cycle; ++e) train_episode(beta);
  }
  MetricsRow row;
  row.seed = seed_;
  row.epoch = epoch;
  row.success_rate = evaluate_policy(env_, agent_, config_.eval_episodes, eval_rng_);
  if (update_count_ > 0) {
    const double n = static_cast<double>(update_count_);
    row.mean_abs_td = td_sum_ / n;
    row.critic_loss = critic_sum_ / n;
    row.actor_loss = actor_sum_ / n;
  }
  row.buffer_episodes = buffer_.size();
  row.wall_clock_s = config_.record_wall_clock ? now_seconds() - start_time_ : 0.0;
  td_sum_ = critic_sum_ = actor_sum_ = 0.0;
  update_count_ = 0;
  epochs_completed_ = epoch + 1;
  return row;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out = open_output(path, std::ios::binary | std::ios::trunc);
  BinaryWriter w(out);
  w.write_magic(kCheckpointMagic);
  w.write<std::uint32_t>(kCheckpointFormatVersion);
  w.write_string(config_.to_text());
  w.write<std::uint64_t>(seed_);
  w.write<std::uint64_t>(epochs_completed_);
  agent_.save(w);
  const std::pair<const char*, const Rng*> streams[] = {
      {"env", &env_rng_},       {"explore", &explore_rng_}, {"relabel", &relabel_rng_},
      {"sample", &sample_rng_}, {"init", &init_rng_},       {"eval", &eval_rng_}};
  w.write<std::uint64_t>(std::size(streams));
  for (const auto& [name, rng] : streams) {
    w.write_string(name);
    w.write_string(rng_state(*rng));
  }
  w.check();
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  try {
    BinaryReader r(in);
    r.expect_magic(kCheckpointMagic, "checkpoint");
    const auto version = r.read<std::uint32_t>("checkpoint format_version");
    if (version != kCheckpointFormatVersion) {
      throw IoError("unsupported checkpoint format_version " + std::to_string(version));
    }
    RunConfig config = parse_run_config(parse_config_text(r.read_string("config text")));
    const auto seed = r.read<std::uint64_t>("seed");
    const auto epochs = r.read<std::uint64_t>("epochs completed");
    Rng scratch(0);
    DdpgAgent agent = make_agent(config, scratch);
    agent.load(r);
    std::map<std::string, std::string> states;
    const auto n = r.read<std::uint64_t>("stream count");
    if (n > 64) throw IoError("implausible stream count");
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string name = r.read_string("stream name");
      states[name] = r.read_string("stream state");
    }
    return LoadedCheckpoint{std::move(config), seed, epochs, std::move(agent), std::move(states)};
  } catch (const IoError& e) {
    throw IoError("corrupt checkpoint " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IoError("corrupt checkpoint " + path.string() + ": embedded config invalid: " +
                  e.what());
  }
}

std::filesystem::path metrics_path(const std::filesystem::path& dir) {
  return dir / "metrics.csv";
}

std::filesystem::path seed_metrics_path(const std::filesystem::path& dir, std::uint64_t seed) {
  return dir / ("metrics_seed" + std::to_string(seed) + ".csv");
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t seed) {
  return dir / ("checkpoint_seed" + std::to_string(seed) + ".bin");
}

namespace {

std::vector<MetricsRow> train_one_seed(const RunConfig& config, std::uint64_t seed,
                                       std::ostream* log, std::mutex& log_mutex) {
  std::ofstream metrics = open_output(seed_metrics_path(config.output_dir, seed), std::ios::trunc);
  metrics << kMetricsHeader << '\n' << std::flush;
  Trainer trainer(config, seed);
  std::vector<MetricsRow> rows;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const MetricsRow row = trainer.run_epoch(epoch);
    metrics << format_metrics_row(row) << '\n' << std::flush;
    if (!metrics) throw IoError("failed writing metrics for seed " + std::to_string(seed));
    rows.push_back(row);
    if (log) {
      std::lock_guard lock(log_mutex);
      *log << "seed " << seed << " epoch " << epoch << " success " << fmt(row.success_rate)
           << " |td| " << fmt(row.mean_abs_td) << " critic " << fmt(row.critic_loss) << '\n'
           << std::flush;
    }
  }
  trainer.save_checkpoint(checkpoint_path(config.output_dir, seed));
  if (config.save_buffer) {
    std::ofstream out = open_output(config.output_dir / ("buffer_seed" + std::to_string(seed) + ".bin"),
                                    std::ios::binary | std::ios::trunc);
    trainer.buffer().save(out);
    if (!out) throw IoError("failed writing buffer snapshot");
  }
  return rows;
}

}  // namespace

std::vector<MetricsRow> train(const RunConfig& config, std::ostream* log) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.output_dir.string());
  {
    std::ofstream probe = open_output(config.output_dir / "config.txt", std::ios::trunc);
    probe << config.to_text();
    if (!probe) throw IoError("cannot write to " + config.output_dir.string());
  }

  const std::size_t n = config.seeds.size();
  std::vector<std::vector<MetricsRow>> per_seed(n);
  std::vector<std::exception_ptr> errors(n);
  std::mutex log_mutex;
  auto work = [&](std::size_t i) {
    try {
      per_seed[i] = train_one_seed(config, config.seeds[i], log, log_mutex);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t jobs = std::min(config.jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      work(i);
      if (errors[i]) break;
    }
  } else {
    std::mutex next_mutex;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(next_mutex);
            if (next == n) return;
            i = next++;
          }
          work(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Merge whatever each seed produced, in seed order, so aborted runs still
  // leave a parseable file.
  std::ofstream merged = open_output(metrics_path(config.output_dir), std::ios::trunc);
  merged << kMetricsHeader << '\n';
  std::vector<MetricsRow> all;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<MetricsRow> rows = per_seed[i];
    if (errors[i]) {
      std::error_code exists_ec;
      const auto p = seed_metrics_path(config.output_dir, config.seeds[i]);
      if (std::filesystem::exists(p, exists_ec)) {
        try {
          rows = read_metrics_csv(p);
        } catch (const IoError&) {
        }
      }
    }
    for (const MetricsRow& r : rows) {
      merged << format_metrics_row(r) << '\n';
      all.push_back(r);
    }
  }
  merged.flush();
  if (!merged) throw IoError("failed writing merged metrics");
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return all;
}

double evaluate(const std::filesystem::path& checkpoint, std::size_t episodes,
                std::uint64_t seed, std::ostream* trajectory_csv) {
  if (episodes == 0) throw ConfigError("evaluate: episodes must be positive");
  LoadedCheckpoint ck = load_checkpoint(checkpoint);
  Env env(ck.config.env);
  Rng eval_rng = make_stream(seed, "eval");
  return evaluate_policy(env, ck.agent, episodes, eval_rng, trajectory_csv);
}

}  // namespace contact_replay
