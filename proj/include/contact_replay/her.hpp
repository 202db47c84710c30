#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "contact_replay/core.hpp"
#include "contact_replay/rng.hpp"

namespace contact_replay {

// Minibatch coordinate: an episode slot in the buffer and a timestep in it.
struct SampleIndex {
  std::size_t episode = 0;
  std::size_t t = 0;

  friend bool operator==(const SampleIndex&, const SampleIndex&) = default;
};

enum class RelabelStrategy { future, final, none };

RelabelStrategy parse_relabel_strategy(std::string_view name);
std::string_view relabel_strategy_name(RelabelStrategy strategy);

struct RelabelConfig {
  RelabelStrategy strategy = RelabelStrategy::future;
  int replay_k = 4;

  void validate() const;
  double relabel_probability() const {
    return strategy == RelabelStrategy::none ? 0.0 : replay_k / (replay_k + 1.0);
  }
};

// Copies the indexed transitions and, with probability k/(k+1), swaps the
// desired goal for an achieved goal of the same episode (a uniformly drawn
// timestep t' >= t for "future", the last one for "final") and recomputes the
// reward. The buffer is never modified. When `relabeled` is non-null it
// receives one flag per output transition.
std::vector<Transition> relabel_minibatch_indices(const ReplayBuffer& buffer,
                                                  std::span<const SampleIndex> indices,
                                                  const RelabelConfig& config,
                                                  double success_threshold, Rng& rng,
                                                  std::vector<std::uint8_t>* relabeled = nullptr);

}  // namespace contact_replay
