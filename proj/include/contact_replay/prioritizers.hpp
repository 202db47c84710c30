#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "contact_replay/core.hpp"
#include "contact_replay/her.hpp"
#include "contact_replay/rng.hpp"

namespace contact_replay {

// sigma(x) = k / (1 + exp(-x * T))
struct SigmoidParams {
  double k = 100.0;
  double temperature = 0.01;

  void validate() const;
  double operator()(double x) const;
};

enum class PrioritizerType { uniform, cebp, ebp, per };

PrioritizerType parse_prioritizer(std::string_view name);
std::string_view prioritizer_name(PrioritizerType type);

struct PrioritizerKind {
  PrioritizerType type = PrioritizerType::uniform;
  SigmoidParams sigmoid;
  // Sum sigma of per-step energy increments instead of sigma of the prefix sum.
  bool per_step_energy = false;
  double per_alpha = 0.6;
  // Floor added to EBP and PER priorities, which can be exactly zero.
  double epsilon_floor = 0.01;
  double ebp_mass = 1.0;
  double ebp_gravity = 9.81;

  void validate() const;
};

struct SampleBatch {
  std::vector<SampleIndex> indices;
  Vec probabilities;  // p_episode of the episode drawn for each index
  Vec is_weights;
};

// c(e, t) for t = 0..H-1 from the episode's touch readings and displacements.
Vec contact_energy(std::span<const Transition> transitions);
inline Vec contact_energy(const Episode& ep) { return contact_energy(ep.transitions); }

Vec smooth(std::span<const double> energy, const SigmoidParams& params);

// Sum over the object's trajectory of |dE_potential| + |dE_kinetic|; the
// rotational term is zero because objects never rotate.
double trajectory_energy_ebp(const Episode& ep, double mass, double gravity);

// Raw (unnormalized) priority of an episode under CEBP: sum_t sigma(c(e,t)).
double cebp_priority(const Episode& ep, const PrioritizerKind& kind);

// Sampling distribution over the buffer's episodes, recomputed from the
// cached contact energies (CEBP), object trajectories (EBP) or stored TD
// priorities (PER).
Vec episode_probabilities(const ReplayBuffer& buffer, const PrioritizerKind& kind);

// I.i.d. episode draws from `probs` by binary search over the cumulative
// distribution, with t uniform in [0, horizon - 1].
std::vector<SampleIndex> sample_indices(std::span<const double> probs, std::size_t batch_size,
                                        std::size_t horizon, Rng& rng);

// w_i = (N * p_i)^-beta, divided by the batch maximum.
Vec is_weights(std::span<const double> drawn_probabilities, std::size_t total_episodes,
               double beta);

// Linear anneal from beta0 at the first epoch to beta_final at the last.
double beta_schedule(double beta0, double beta_final, std::size_t epoch, std::size_t epochs);

struct TdSample {
  std::size_t episode = 0;  // buffer slot
  double abs_td = 0.0;
};

// Stateful front end used during training. Priorities are cached on each
// episode at store time; only PER rewrites them afterwards.
class Prioritizer {
 public:
  explicit Prioritizer(PrioritizerKind kind);

  const PrioritizerKind& kind() const { return kind_; }

  // Fills ep.priority before the episode enters the buffer.
  void prepare(Episode& ep) const;

  // Same distribution as episode_probabilities(), using cached priorities.
  Vec probabilities(const ReplayBuffer& buffer) const;

  // Sets each touched episode's priority to the mean |delta| sampled for it
  // in this batch. Never-evaluated episodes keep the running max priority.
  void td_error_priority(ReplayBuffer& buffer, std::span<const TdSample> deltas);

  double max_td_priority() const { return max_td_priority_; }
  void set_max_td_priority(double value) { max_td_priority_ = value; }

  SampleBatch sample(const ReplayBuffer& buffer, std::size_t batch_size, double beta,
                     Rng& rng) const;

 private:
  double weight(const Episode& ep) const;

  PrioritizerKind kind_;
  double max_td_priority_ = 1.0;
};

}  // namespace contact_replay
