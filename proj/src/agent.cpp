#include "contact_replay/agent.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "contact_replay/errors.hpp"

namespace contact_replay {

namespace {
constexpr double kNormEps = 1e-2;
}  // namespace

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("agent.tau must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("agent.batch_size must be >= 1");
  if (action_noise_std < 0.0) throw ConfigError("agent.action_noise_std must be >= 0");
  if (!(random_action_prob >= 0.0 && random_action_prob <= 1.0)) {
    throw ConfigError("agent.random_action_prob must lie in [0, 1]");
  }
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw ConfigError("agent learning rates must be positive");
  }
  if (!(norm_clip > 0.0)) throw ConfigError("agent.norm_clip must be positive");
  if (action_l2 < 0.0) throw ConfigError("agent.action_l2 must be >= 0");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("agent.hidden sizes must be positive");
  }
}

Normalizer::Normalizer(std::size_t size, double clip)
    : sum_(size, 0.0), sum_sq_(size, 0.0), clip_(clip) {}

void Normalizer::update(std::span<const double> x) {
  require(x.size() == sum_.size(), "Normalizer::update: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum_[i] += x[i];
    sum_sq_[i] += x[i] * x[i];
  }
  ++count_;
}

Vec Normalizer::mean() const {
  Vec m(sum_.size(), 0.0);
  if (count_ == 0) return m;
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = sum_[i] / static_cast<double>(count_);
  return m;
}

Vec Normalizer::stddev() const {
  Vec s(sum_.size(), 1.0);
  if (count_ == 0) return s;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double m = sum_[i] / n;
    const double var = sum_sq_[i] / n - m * m;
    s[i] = std::sqrt(std::max(kNormEps * kNormEps, var));
  }
  return s;
}

void Normalizer::normalize(std::span<const double> x, std::span<double> out) const {
  require(x.size() == sum_.size() && out.size() == x.size(), "Normalizer: size mismatch");
  if (count_ == 0) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], -clip_, clip_);
    return;
  }
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = sum_[i] / n;
    const double sd = std::sqrt(std::max(kNormEps * kNormEps, sum_sq_[i] / n - m * m));
    out[i] = std::clamp((x[i] - m) / sd, -clip_, clip_);
  }
}

void Normalizer::save(BinaryWriter& w) const {
  w.write<std::uint64_t>(count_);
  w.write<double>(clip_);
  w.write_vector(sum_);
  w.write_vector(sum_sq_);
}

Normalizer Normalizer::load(BinaryReader& r) {
  Normalizer n;
  n.count_ = r.read<std::uint64_t>("normalizer count");
  n.clip_ = r.read<double>("normalizer clip");
  n.sum_ = r.read_vector("normalizer sum");
  n.sum_sq_ = r.read_vector("normalizer sum of squares");
  if (n.sum_.size() != n.sum_sq_.size()) throw IoError("normalizer moment sizes differ");
  return n;
}

DdpgAgent::DdpgAgent(AgentConfig config, std::size_t obs_size, std::size_t goal_size,
                     std::size_t action_size, std::size_t horizon, Rng& init_rng)
    : config_(std::move(config)),
      obs_size_(obs_size),
      goal_size_(goal_size),
      action_size_(action_size),
      horizon_(horizon),
      obs_norm_(obs_size, config_.norm_clip),
      goal_norm_(goal_size, config_.norm_clip) {
  config_.validate();
  std::vector<std::size_t> actor_sizes{obs_size + goal_size};
  actor_sizes.insert(actor_sizes.end(), config_.hidden.begin(), config_.hidden.end());
  actor_sizes.push_back(action_size);
  std::vector<std::size_t> critic_sizes{obs_size + goal_size + action_size};
  critic_sizes.insert(critic_sizes.end(), config_.hidden.begin(), config_.hidden.end());
  critic_sizes.push_back(1);

  actor_ = Mlp(actor_sizes, OutputActivation::tanh);
  critic_ = Mlp(critic_sizes, OutputActivation::identity);
  actor_.init_uniform(init_rng);
  critic_.init_uniform(init_rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = AdamState(actor_.parameter_count(), config_.actor_lr);
  critic_opt_ = AdamState(critic_.parameter_count(), config_.critic_lr);
}

void DdpgAgent::set_zero_weights() {
  actor_.set_zero();
  critic_.set_zero();
  target_actor_.set_zero();
  target_critic_.set_zero();
}

Vec DdpgAgent::act(std::span<const double> obs, std::span<const double> goal, bool explore,
                   Rng& rng) const {
  require(obs.size() == obs_size_ && goal.size() == goal_size_, "act: input size mismatch");
  Vec action(action_size_);
  if (explore && uniform01(rng) < config_.random_action_prob) {
    for (double& a : action) a = uniform(rng, -1.0, 1.0);
    return action;
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(obs_size_ + goal_size_), 1);
  std::span<double> col(x.data(), obs_size_ + goal_size_);
  if (config_.normalize) {
    obs_norm_.normalize(obs, col.first(obs_size_));
    goal_norm_.normalize(goal, col.subspan(obs_size_));
  } else {
    std::copy(obs.begin(), obs.end(), col.begin());
    std::copy(goal.begin(), goal.end(), col.begin() + static_cast<std::ptrdiff_t>(obs_size_));
  }
  const Eigen::MatrixXd out = actor_.predict(x);
  std::normal_distribution<double> noise(0.0, config_.action_noise_std);
  for (std::size_t i = 0; i < action_size_; ++i) {
    double a = out(static_cast<Eigen::Index>(i), 0);
    if (explore && config_.action_noise_std > 0.0) a += noise(rng);
    action[i] = std::clamp(a, -1.0, 1.0);
  }
  return action;
}

Eigen::MatrixXd DdpgAgent::policy_inputs(std::span<const Transition> batch, bool next) const {
  const std::size_t rows = obs_size_ + goal_size_;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Transition& tr = batch[j];
    const Vec& obs = next ? tr.next_state : tr.state;
    require(obs.size() == obs_size_ && tr.desired_goal.size() == goal_size_,
            "agent: transition has wrong observation or goal size");
    std::span<double> col(x.col(static_cast<Eigen::Index>(j)).data(), rows);
    if (config_.normalize) {
      obs_norm_.normalize(obs, col.first(obs_size_));
      goal_norm_.normalize(tr.desired_goal, col.subspan(obs_size_));
    } else {
      std::copy(obs.begin(), obs.end(), col.begin());
      std::copy(tr.desired_goal.begin(), tr.desired_goal.end(),
                col.begin() + static_cast<std::ptrdiff_t>(obs_size_));
    }
  }
  return x;
}

Eigen::MatrixXd DdpgAgent::critic_inputs(const Eigen::MatrixXd& policy_in,
                                         const Eigen::MatrixXd& actions) const {
  Eigen::MatrixXd x(policy_in.rows() + actions.rows(), policy_in.cols());
  x.topRows(policy_in.rows()) = policy_in;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

Eigen::VectorXd DdpgAgent::td_targets(std::span<const Transition> batch) const {
  const Eigen::MatrixXd next_in = policy_inputs(batch, true);
  const Eigen::MatrixXd next_actions = target_actor_.predict(next_in);
  const Eigen::MatrixXd next_q = target_critic_.predict(critic_inputs(next_in, next_actions));
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  const double lo = -static_cast<double>(horizon_);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    double target = batch[j].reward + config_.gamma * next_q(0, jj);
    if (config_.clip_target) target = std::clamp(target, lo, 0.0);
    y(jj) = target;
  }
  return y;
}

Vec DdpgAgent::td_errors(std::span<const Transition> batch) const {
  const Eigen::VectorXd y = td_targets(batch);
  const Eigen::MatrixXd in = policy_inputs(batch, false);
  Eigen::MatrixXd actions(static_cast<Eigen::Index>(action_size_),
                          static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    require(batch[j].action.size() == action_size_, "agent: transition has wrong action size");
    for (std::size_t i = 0; i < action_size_; ++i) {
      actions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch[j].action[i];
    }
  }
  const Eigen::MatrixXd q = critic_.predict(critic_inputs(in, actions));
  Vec delta(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    delta[j] = y(static_cast<Eigen::Index>(j)) - q(0, static_cast<Eigen::Index>(j));
  }
  return delta;
}

UpdateStats DdpgAgent::update(const SampleBatch& batch, std::span<const Transition> transitions) {
  require(batch.is_weights.size() == transitions.size(),
          "update: one importance weight per transition required");
  return update_impl(transitions, batch.is_weights.data());
}

UpdateStats DdpgAgent::update_unweighted(std::span<const Transition> transitions) {
  return update_impl(transitions, nullptr);
}

UpdateStats DdpgAgent::update_impl(std::span<const Transition> transitions,
                                   const double* weights) {
  require(!transitions.empty(), "update: empty batch");
  UpdateStats stats;
  const std::size_t n = transitions.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Critic.
  const Eigen::VectorXd y = td_targets(transitions);
  const Eigen::MatrixXd in = policy_inputs(transitions, false);
  Eigen::MatrixXd actions(static_cast<Eigen::Index>(action_size_), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    require(transitions[j].action.size() == action_size_,
            "agent: transition has wrong action size");
    for (std::size_t i = 0; i < action_size_; ++i) {
      actions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          transitions[j].action[i];
    }
  }
  const Eigen::MatrixXd q = critic_.forward(critic_inputs(in, actions));
  Eigen::MatrixXd dq(1, static_cast<Eigen::Index>(n));
  stats.abs_td.resize(n);
  double loss = 0.0;
  double abs_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double delta = y(jj) - q(0, jj);
    const double weighted = weights ? weights[j] * delta : delta;
    loss += weighted * delta;
    dq(0, jj) = -2.0 * weighted * inv_n;
    stats.abs_td[j] = std::abs(delta);
    abs_sum += stats.abs_td[j];
  }
  stats.critic_loss = loss * inv_n;
  stats.mean_abs_td = abs_sum * inv_n;
  if (!std::isfinite(stats.critic_loss)) {
    stats.finite = false;
    ++skipped_updates_;
    return stats;
  }
  critic_.backward(dq);
  if (!adam_step(critic_.parameters(), critic_.gradients(), critic_opt_)) {
    stats.finite = false;
    ++skipped_updates_;
    return stats;
  }

  // Actor: gradient flows through the critic's action inputs.
  const Eigen::MatrixXd pi = actor_.forward(in);
  const Eigen::MatrixXd q_pi = critic_.forward(critic_inputs(in, pi));
  stats.actor_loss = -q_pi.sum() * inv_n;
  if (config_.action_l2 > 0.0) {
    stats.actor_loss += config_.action_l2 * pi.squaredNorm() * inv_n / static_cast<double>(action_size_);
  }
  if (!std::isfinite(stats.actor_loss)) {
    stats.finite = false;
    ++skipped_updates_;
    return stats;
  }
  const Eigen::MatrixXd dq_pi = Eigen::MatrixXd::Constant(1, static_cast<Eigen::Index>(n), -inv_n);
  const Eigen::MatrixXd d_in = critic_.backward(dq_pi);
  Eigen::MatrixXd d_action = d_in.bottomRows(static_cast<Eigen::Index>(action_size_));
  if (config_.action_l2 > 0.0) {
    d_action += (2.0 * config_.action_l2 * inv_n / static_cast<double>(action_size_)) * pi;
  }
  actor_.backward(d_action);
  if (!adam_step(actor_.parameters(), actor_.gradients(), actor_opt_)) {
    stats.finite = false;
    ++skipped_updates_;
    return stats;
  }

  soft_update(target_actor_, actor_, config_.tau);
  soft_update(target_critic_, critic_, config_.tau);
  return stats;
}

void DdpgAgent::observe_episode(const Episode& ep) {
  for (const Transition& tr : ep.transitions) {
    obs_norm_.update(tr.state);
    goal_norm_.update(tr.desired_goal);
    goal_norm_.update(tr.achieved_goal);
  }
  if (!ep.transitions.empty()) obs_norm_.update(ep.transitions.back().next_state);
}

void DdpgAgent::save(BinaryWriter& w) const {
  actor_.save(w);
  critic_.save(w);
  target_actor_.save(w);
  target_critic_.save(w);
  actor_opt_.save(w);
  critic_opt_.save(w);
  obs_norm_.save(w);
  goal_norm_.save(w);
  w.write<std::uint64_t>(skipped_updates_);
}

void DdpgAgent::load(BinaryReader& r) {
  Mlp actor = Mlp::load(r);
  Mlp critic = Mlp::load(r);
  Mlp target_actor = Mlp::load(r);
  Mlp target_critic = Mlp::load(r);
  if (!actor.same_architecture(actor_) || !target_actor.same_architecture(actor_) ||
      !critic.same_architecture(critic_) || !target_critic.same_architecture(critic_)) {
    throw IoError("checkpoint network architecture does not match the agent configuration");
  }
  AdamState actor_opt = AdamState::load(r);
  AdamState critic_opt = AdamState::load(r);
  if (static_cast<std::size_t>(actor_opt.m.size()) != actor.parameter_count() ||
      static_cast<std::size_t>(critic_opt.m.size()) != critic.parameter_count()) {
    throw IoError("checkpoint optimizer state does not match network size");
  }
  Normalizer obs_norm = Normalizer::load(r);
  Normalizer goal_norm = Normalizer::load(r);
  if (obs_norm.size() != obs_size_ || goal_norm.size() != goal_size_) {
    throw IoError("checkpoint normalizer size does not match observation layout");
  }
  skipped_updates_ = r.read<std::uint64_t>("skipped updates");
  actor_ = std::move(actor);
  critic_ = std::move(critic);
  target_actor_ = std::move(target_actor);
  target_critic_ = std::move(target_critic);
  actor_opt_ = std::move(actor_opt);
  critic_opt_ = std::move(critic_opt);
  obs_norm_ = std::move(obs_norm);
  goal_norm_ = std::move(goal_norm);
}

}  // namespace contact_replay
