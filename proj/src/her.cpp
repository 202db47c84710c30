#include "contact_replay/her.hpp"

#include <random>
#include <string>

#include "contact_replay/env.hpp"
#include "contact_replay/errors.hpp"

namespace contact_replay {

RelabelStrategy parse_relabel_strategy(std::string_view name) {
  if (name == "future") return RelabelStrategy::future;
  if (name == "final") return RelabelStrategy::final;
  if (name == "none") return RelabelStrategy::none;
  throw ConfigError("unknown her.strategy '" + std::string(name) +
                    "' (expected future, final or none)");
}

std::string_view relabel_strategy_name(RelabelStrategy strategy) {
  switch (strategy) {
    case RelabelStrategy::future:
      return "future";
    case RelabelStrategy::final:
      return "final";
    case RelabelStrategy::none:
      return "none";
  }
  return "none";
}

void RelabelConfig::validate() const {
  if (strategy != RelabelStrategy::none && replay_k < 1) {
    throw ConfigError("her.replay_k must be >= 1");
  }
}

std::vector<Transition> relabel_minibatch_indices(const ReplayBuffer& buffer,
                                                  std::span<const SampleIndex> indices,
                                                  const RelabelConfig& config,
                                                  double success_threshold, Rng& rng,
                                                  std::vector<std::uint8_t>* relabeled) {
  std::vector<Transition> out;
  out.reserve(indices.size());
  if (relabeled) relabeled->assign(indices.size(), 0);
  const std::size_t horizon = buffer.horizon();
  const double p_relabel = config.relabel_probability();

  for (std::size_t j = 0; j < indices.size(); ++j) {
    const SampleIndex& idx = indices[j];
    out.push_back(buffer.get_transition(idx.episode, idx.t));
    if (config.strategy == RelabelStrategy::none) continue;
    if (uniform01(rng) >= p_relabel) continue;

    std::size_t source_t = horizon - 1;
    if (config.strategy == RelabelStrategy::future) {
      std::uniform_int_distribution<std::size_t> pick(idx.t, horizon - 1);
      source_t = pick(rng);
    }
    Transition& tr = out.back();
    tr.desired_goal = buffer.get_transition(idx.episode, source_t).achieved_goal;
    tr.reward = compute_reward(tr.achieved_goal, tr.desired_goal, success_threshold);
    if (relabeled) (*relabeled)[j] = 1;
  }
  return out;
}

}  // namespace contact_replay
