#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "contact_replay/binary_io.hpp"
#include "contact_replay/core.hpp"
#include "contact_replay/nn.hpp"
#include "contact_replay/prioritizers.hpp"
#include "contact_replay/rng.hpp"

namespace contact_replay {

struct AgentConfig {
  double gamma = 0.98;
  double tau = 0.05;
  double action_noise_std = 0.2;
  double random_action_prob = 0.3;
  std::size_t batch_size = 256;
  std::size_t updates_per_episode = 40;
  std::vector<std::size_t> hidden = {256, 256, 256};
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  // Clip TD targets to [-horizon, 0].
  bool clip_target = true;
  bool normalize = true;
  double norm_clip = 5.0;
  // Penalty on squared actor outputs; 0 keeps the plain DDPG actor loss.
  double action_l2 = 0.0;

  void validate() const;
};

// Running per-dimension mean/std from stored episodes. Normalized values are
// clipped to +-clip standard deviations.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(std::size_t size, double clip);

  void update(std::span<const double> x);
  void normalize(std::span<const double> x, std::span<double> out) const;

  std::size_t size() const { return sum_.size(); }
  std::size_t count() const { return count_; }
  Vec mean() const;
  Vec stddev() const;

  void save(BinaryWriter& w) const;
  static Normalizer load(BinaryReader& r);

 private:
  Vec sum_;
  Vec sum_sq_;
  std::size_t count_ = 0;
  double clip_ = 5.0;
};

struct UpdateStats {
  double mean_abs_td = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  Vec abs_td;  // per transition, for TD-error priorities
  bool finite = true;
};

// Goal-conditioned DDPG: actor pi(s, g) with tanh head, critic Q(s, g, a).
class DdpgAgent {
 public:
  DdpgAgent(AgentConfig config, std::size_t obs_size, std::size_t goal_size,
            std::size_t action_size, std::size_t horizon, Rng& init_rng);

  Vec act(std::span<const double> obs, std::span<const double> goal, bool explore,
          Rng& rng) const;

  // delta_j = y_j - Q(s_j, g_j, a_j) with y_j = r_j + gamma * Q'(s'_j, g_j, pi'(s'_j, g_j)).
  Vec td_errors(std::span<const Transition> batch) const;

  // One critic step on mean(w * delta^2), one actor step on -mean(Q(s, g, pi(s, g))),
  // then a soft update of both target networks.
  UpdateStats update(const SampleBatch& batch, std::span<const Transition> transitions);
  // Same step without importance weights.
  UpdateStats update_unweighted(std::span<const Transition> transitions);

  // Feeds a freshly stored episode into the input normalizers.
  void observe_episode(const Episode& ep);

  void set_zero_weights();

  const AgentConfig& config() const { return config_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic() const { return target_critic_; }
  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  Mlp& target_actor() { return target_actor_; }
  Mlp& target_critic() { return target_critic_; }
  const AdamState& actor_optimizer() const { return actor_opt_; }
  const AdamState& critic_optimizer() const { return critic_opt_; }
  const Normalizer& obs_normalizer() const { return obs_norm_; }
  const Normalizer& goal_normalizer() const { return goal_norm_; }
  std::uint64_t skipped_updates() const { return skipped_updates_; }

  void save(BinaryWriter& w) const;
  // Restores networks, optimizers and normalizers saved by save(); the
  // architecture must match this agent's configuration.
  void load(BinaryReader& r);

 private:
  Eigen::MatrixXd policy_inputs(std::span<const Transition> batch, bool next) const;
  Eigen::MatrixXd critic_inputs(const Eigen::MatrixXd& policy_in, const Eigen::MatrixXd& actions) const;
  Eigen::VectorXd td_targets(std::span<const Transition> batch) const;
  UpdateStats update_impl(std::span<const Transition> transitions, const double* weights);

  AgentConfig config_;
  std::size_t obs_size_;
  std::size_t goal_size_;
  std::size_t action_size_;
  std::size_t horizon_;
  Mlp actor_;
  Mlp critic_;
  Mlp target_actor_;
  Mlp target_critic_;
  AdamState actor_opt_;
  AdamState critic_opt_;
  Normalizer obs_norm_;
  Normalizer goal_norm_;
  std::uint64_t skipped_updates_ = 0;
};

}  // namespace contact_replay
