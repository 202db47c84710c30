#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "contact_replay/config.hpp"
#include "contact_replay/errors.hpp"
#include "contact_replay/harness.hpp"

using namespace contact_replay;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.file, "config file (key = value)");
  cmd->add_option("-s,--set", args.overrides, "override, key=value (repeatable)");
}

RunConfig load_config(const ConfigArgs& args) {
  ConfigMap map;
  if (!args.file.empty()) map = read_config_file(args.file);
  if (!map.count("run.output_dir")) map["run.output_dir"] = default_output_dir().string();
  for (const auto& o : args.overrides) apply_override(map, o);
  RunConfig cfg = parse_run_config(map);
  cfg.validate();
  return cfg;
}

double entropy(const Vec& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

int inspect_buffer(const std::string& path, const RunConfig& cfg, bool per_episode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const ReplayBuffer buffer = ReplayBuffer::load(in);
  std::cout << "episodes " << buffer.size() << " / " << buffer.capacity() << ", horizon "
            << buffer.horizon() << ", next id " << buffer.next_id() << '\n';
  if (buffer.size() == 0) return 0;
  const Vec p = episode_probabilities(buffer, cfg.prioritizer);
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  std::printf("prioritizer %s  entropy %.6f (uniform %.6f)  min %.6g  max %.6g  ratio %.6g\n",
              std::string(prioritizer_name(cfg.prioritizer.type)).c_str(), entropy(p),
              std::log(static_cast<double>(p.size())), *lo, *hi,
              *lo > 0.0 ? *hi / *lo : INFINITY);
  if (per_episode) {
    std::cout << "episode_id,final_contact_energy,stored_priority,probability\n";
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      const Episode& ep = buffer.episode(i);
      std::printf("%llu,%.9g,%.9g,%.9g\n", static_cast<unsigned long long>(ep.episode_id),
                  ep.cumulative_contact_energy.empty() ? 0.0
                                                       : ep.cumulative_contact_energy.back(),
                  ep.priority, p[i]);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contact-energy prioritized hindsight replay toolkit"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train all configured seeds");
  add_config_options(train_cmd, train_args);
  bool quiet = false;
  train_cmd->add_flag("-q,--quiet", quiet, "no progress log");

  ConfigArgs eval_args;
  std::string checkpoint;
  std::size_t eval_episodes = 20;
  std::uint64_t eval_seed = 0;
  std::string dump;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint noise-free");
  eval_cmd->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("-n,--episodes", eval_episodes, "number of episodes");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed");
  eval_cmd->add_option("--dump-trajectory", dump, "write per-step CSV here");

  ConfigArgs sweep_args;
  std::string parameter;
  std::vector<std::string> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "train once per value of one config key");
  add_config_options(sweep_cmd, sweep_args);
  sweep_cmd->add_option("-p,--parameter", parameter, "config key, e.g. prioritizer.sigmoid.T")
      ->required();
  sweep_cmd->add_option("-v,--values", values, "values to try")->required();

  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::string plot_out = "plot.svg";
  std::string title = "success rate";
  auto* plot_cmd = app.add_subcommand("plot", "median + IQR chart from metrics or sweep CSVs");
  plot_cmd->add_option("inputs", inputs, "metrics.csv or sweep.csv files")->required();
  plot_cmd->add_option("-l,--label", labels, "label per input (default: file path)");
  plot_cmd->add_option("-o,--output", plot_out, "SVG output path");
  plot_cmd->add_option("-t,--title", title, "chart title");

  ConfigArgs inspect_args;
  std::string buffer_file;
  bool per_episode = false;
  auto* inspect_cmd =
      app.add_subcommand("inspect-buffer", "priority distribution of a saved buffer");
  inspect_cmd->add_option("buffer", buffer_file, "buffer file (run.save_buffer = true)")
      ->required();
  add_config_options(inspect_cmd, inspect_args);
  inspect_cmd->add_flag("--episodes", per_episode, "print one row per episode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) {
      const RunConfig cfg = load_config(train_args);
      const auto rows = train(cfg, quiet ? nullptr : &std::cerr);
      std::cerr << "wrote " << rows.size() << " rows to " << metrics_path(cfg.output_dir)
                << '\n';
    } else if (*eval_cmd) {
      std::ofstream traj;
      if (!dump.empty()) {
        traj.open(dump, std::ios::trunc);
        if (!traj) throw IoError("cannot write " + dump);
      }
      const double rate =
          evaluate(checkpoint, eval_episodes, eval_seed, dump.empty() ? nullptr : &traj);
      std::printf("success_rate %.6f\n", rate);
    } else if (*sweep_cmd) {
      const RunConfig cfg = load_config(sweep_args);
      sweep(cfg, parameter, values, &std::cerr);
      std::cerr << "wrote " << (cfg.output_dir / "sweep.csv") << '\n';
    } else if (*plot_cmd) {
      if (!labels.empty() && labels.size() != inputs.size()) {
        throw ConfigError("give one --label per input");
      }
      std::vector<CurveSummary> curves;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto c = load_curves(inputs[i], labels.empty() ? inputs[i] : labels[i]);
        curves.insert(curves.end(), c.begin(), c.end());
      }
      std::ofstream out(plot_out, std::ios::trunc);
      if (!out) throw IoError("cannot write " + plot_out);
      plot_svg(curves, out, title);
      if (!out) throw IoError("failed writing " + plot_out);
    } else if (*inspect_cmd) {
      return inspect_buffer(buffer_file, load_config(inspect_args), per_episode);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
