#include "contact_replay/prioritizers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "contact_replay/errors.hpp"

namespace contact_replay {

void SigmoidParams::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("prioritizer.sigmoid.k must be > 0");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("prioritizer.sigmoid.T must be > 0");
  }
}

double SigmoidParams::operator()(double x) const {
  return k / (1.0 + std::exp(-x * temperature));
}

PrioritizerType parse_prioritizer(std::string_view name) {
  if (name == "uniform") return PrioritizerType::uniform;
  if (name == "cebp") return PrioritizerType::cebp;
  if (name == "ebp") return PrioritizerType::ebp;
  if (name == "per") return PrioritizerType::per;
  throw ConfigError("unknown prioritizer.kind '" + std::string(name) +
                    "' (expected uniform, cebp, ebp or per)");
}

std::string_view prioritizer_name(PrioritizerType type) {
  switch (type) {
    case PrioritizerType::uniform:
      return "uniform";
    case PrioritizerType::cebp:
      return "cebp";
    case PrioritizerType::ebp:
      return "ebp";
    case PrioritizerType::per:
      return "per";
  }
  return "uniform";
}

void PrioritizerKind::validate() const {
  sigmoid.validate();
  if (!(per_alpha > 0.0)) throw ConfigError("prioritizer.per.alpha must be > 0");
  if (!(epsilon_floor > 0.0)) throw ConfigError("prioritizer.epsilon_floor must be > 0");
  if (!(ebp_mass > 0.0) || !(ebp_gravity > 0.0)) {
    throw ConfigError("prioritizer.ebp mass and gravity must be > 0");
  }
}

Vec contact_energy(std::span<const Transition> transitions) {
  Vec c(transitions.size());
  double running = 0.0;
  for (std::size_t t = 0; t < transitions.size(); ++t) {
    const Transition& tr = transitions[t];
    running += (tr.touch_left + tr.touch_right) * tr.object_displacement;
    c[t] = running;
  }
  return c;
}

Vec smooth(std::span<const double> energy, const SigmoidParams& params) {
  Vec out(energy.size());
  std::transform(energy.begin(), energy.end(), out.begin(), params);
  return out;
}

double trajectory_energy_ebp(const Episode& ep, double mass, double gravity) {
  auto potential = [&](std::span<const double> obs) {
    return mass * gravity * object_position(obs)[2];
  };
  auto kinetic = [&](std::span<const double> obs) {
    const auto v = object_velocity(obs);
    return 0.5 * mass * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  };
  double total = 0.0;
  for (const Transition& tr : ep.transitions) {
    total += std::abs(potential(tr.next_state) - potential(tr.state));
    total += std::abs(kinetic(tr.next_state) - kinetic(tr.state));
  }
  return total;
}

double cebp_priority(const Episode& ep, const PrioritizerKind& kind) {
  const Vec& c = ep.cumulative_contact_energy;
  double sum = 0.0;
  double previous = 0.0;
  for (double value : c) {
    sum += kind.sigmoid(kind.per_step_energy ? value - previous : value);
    previous = value;
  }
  return sum;
}

Vec episode_probabilities(const ReplayBuffer& buffer, const PrioritizerKind& kind) {
  require(!buffer.empty(), "episode_probabilities: empty buffer");
  const std::size_t n = buffer.size();
  Vec p(n);
  if (kind.type == PrioritizerType::uniform) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
    return p;
  }
  for (std::size_t e = 0; e < n; ++e) {
    const Episode& ep = buffer.episode(e);
    switch (kind.type) {
      case PrioritizerType::cebp:
        p[e] = cebp_priority(ep, kind);
        break;
      case PrioritizerType::ebp:
        p[e] = trajectory_energy_ebp(ep, kind.ebp_mass, kind.ebp_gravity) + kind.epsilon_floor;
        break;
      case PrioritizerType::per:
        p[e] = std::pow(ep.priority + kind.epsilon_floor, kind.per_alpha);
        break;
      case PrioritizerType::uniform:
        break;
    }
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

std::vector<SampleIndex> sample_indices(std::span<const double> probs, std::size_t batch_size,
                                        std::size_t horizon, Rng& rng) {
  require(!probs.empty(), "sample_indices: empty distribution");
  require(batch_size >= 1, "sample_indices: batch_size must be >= 1");
  require(horizon >= 1, "sample_indices: horizon must be >= 1");
  Vec cumulative(probs.size());
  double running = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(probs[i] >= 0.0, "sample_indices: negative probability");
    running += probs[i];
    cumulative[i] = running;
  }
  require(running > 0.0, "sample_indices: distribution has zero mass");

  std::uniform_int_distribution<std::size_t> pick_t(0, horizon - 1);
  std::vector<SampleIndex> out(batch_size);
  for (SampleIndex& idx : out) {
    const double u = uniform01(rng) * running;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t e = static_cast<std::size_t>(it - cumulative.begin());
    if (e >= probs.size()) {
      e = static_cast<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), running) -
                                   cumulative.begin());
    }
    idx.episode = e;
    idx.t = pick_t(rng);
  }
  return out;
}

Vec is_weights(std::span<const double> drawn_probabilities, std::size_t total_episodes,
               double beta) {
  require(total_episodes >= 1, "is_weights: total_episodes must be >= 1");
  require(beta >= 0.0 && beta <= 1.0, "is_weights: beta must lie in [0, 1]");
  Vec w(drawn_probabilities.size());
  double max_w = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = drawn_probabilities[i];
    require(p > 0.0, "is_weights: probability must be positive");
    w[i] = std::pow(static_cast<double>(total_episodes) * p, -beta);
    max_w = std::max(max_w, w[i]);
  }
  for (double& v : w) v /= max_w;
  return w;
}

double beta_schedule(double beta0, double beta_final, std::size_t epoch, std::size_t epochs) {
  if (epochs <= 1) return beta0;
  const double frac =
      std::min(1.0, static_cast<double>(epoch) / static_cast<double>(epochs - 1));
  return beta0 + (beta_final - beta0) * frac;
}

Prioritizer::Prioritizer(PrioritizerKind kind) : kind_(kind) { kind_.validate(); }

void Prioritizer::prepare(Episode& ep) const {
  switch (kind_.type) {
    case PrioritizerType::uniform:
      ep.priority = 1.0;
      break;
    case PrioritizerType::cebp:
      ep.priority = cebp_priority(ep, kind_);
      break;
    case PrioritizerType::ebp:
      ep.priority = trajectory_energy_ebp(ep, kind_.ebp_mass, kind_.ebp_gravity);
      break;
    case PrioritizerType::per:
      ep.priority = max_td_priority_;
      ep.td_evaluated = false;
      break;
  }
}

double Prioritizer::weight(const Episode& ep) const {
  switch (kind_.type) {
    case PrioritizerType::uniform:
      return 1.0;
    case PrioritizerType::cebp:
      return ep.priority;
    case PrioritizerType::ebp:
      return ep.priority + kind_.epsilon_floor;
    case PrioritizerType::per:
      return std::pow(ep.priority + kind_.epsilon_floor, kind_.per_alpha);
  }
  return 1.0;
}

Vec Prioritizer::probabilities(const ReplayBuffer& buffer) const {
  require(!buffer.empty(), "probabilities: empty buffer");
  const std::size_t n = buffer.size();
  Vec p(n);
  if (kind_.type == PrioritizerType::uniform) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
    return p;
  }
  double total = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    p[e] = weight(buffer.episode(e));
    total += p[e];
  }
  for (double& v : p) v /= total;
  return p;
}

void Prioritizer::td_error_priority(ReplayBuffer& buffer, std::span<const TdSample> deltas) {
  std::map<std::size_t, std::pair<double, std::size_t>> sums;
  for (const TdSample& d : deltas) {
    auto& [sum, count] = sums[d.episode];
    sum += d.abs_td;
    ++count;
  }
  for (const auto& [slot, acc] : sums) {
    Episode& ep = buffer.episode(slot);
    ep.priority = acc.first / static_cast<double>(acc.second);
    ep.td_evaluated = true;
    max_td_priority_ = std::max(max_td_priority_, ep.priority);
  }
}

SampleBatch Prioritizer::sample(const ReplayBuffer& buffer, std::size_t batch_size, double beta,
                                Rng& rng) const {
  SampleBatch batch;
  const Vec probs = probabilities(buffer);
  batch.indices = sample_indices(probs, batch_size, buffer.horizon(), rng);
  batch.probabilities.reserve(batch_size);
  for (const SampleIndex& idx : batch.indices) batch.probabilities.push_back(probs[idx.episode]);
  batch.is_weights = is_weights(batch.probabilities, buffer.size(), beta);
  return batch;
}

}  // namespace contact_replay
