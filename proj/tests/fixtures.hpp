#pragma once

// Shared test helpers and independent oracles. Nothing here calls into the
// library code it is used to check.

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "contact_replay/core.hpp"
#include "contact_replay/rng.hpp"

namespace fixtures {

using contact_replay::Episode;
using contact_replay::Rng;
using contact_replay::Transition;
using contact_replay::Vec;
namespace layout = contact_replay::obs_layout;

inline double unif(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Synthetic transition with full-size vectors. With probability contact_prob
// the step carries touch force and object displacement.
inline Transition random_transition(Rng& rng, double contact_prob) {
  Transition tr;
  tr.state.resize(layout::kSize);
  tr.next_state.resize(layout::kSize);
  for (auto& x : tr.state) x = unif(rng, -0.2, 0.2);
  for (auto& x : tr.next_state) x = unif(rng, -0.2, 0.2);
  tr.action = {unif(rng, -1, 1), unif(rng, -1, 1), unif(rng, -1, 1), unif(rng, -1, 1)};
  tr.desired_goal = {unif(rng, -0.15, 0.15), unif(rng, -0.15, 0.15), 0.02};
  tr.achieved_goal = {tr.next_state[layout::kObjectPos], tr.next_state[layout::kObjectPos + 1],
                      tr.next_state[layout::kObjectPos + 2]};
  const double dx = tr.achieved_goal[0] - tr.desired_goal[0];
  const double dy = tr.achieved_goal[1] - tr.desired_goal[1];
  const double dz = tr.achieved_goal[2] - tr.desired_goal[2];
  tr.reward = std::sqrt(dx * dx + dy * dy + dz * dz) <= 0.05 ? 0.0 : -1.0;
  if (unif(rng, 0, 1) < contact_prob) {
    tr.touch_left = unif(rng, 0, 5);
    tr.touch_right = unif(rng, 0, 5);
    tr.object_displacement = unif(rng, 0, 0.03);
  }
  return tr;
}

// c(e, t) recomputed from scratch for every t (quadratic, no running sum).
inline Vec brute_force_energy(const std::vector<Transition>& trs) {
  Vec c(trs.size(), 0.0);
  for (std::size_t t = 0; t < trs.size(); ++t) {
    double s = 0.0;
    for (std::size_t i = 0; i <= t; ++i) {
      s += (trs[i].touch_left + trs[i].touch_right) * trs[i].object_displacement;
    }
    c[t] = s;
  }
  return c;
}

inline Episode random_episode(Rng& rng, std::size_t horizon, double contact_prob) {
  Episode ep;
  for (std::size_t t = 0; t < horizon; ++t) ep.transitions.push_back(random_transition(rng, contact_prob));
  ep.cumulative_contact_energy = brute_force_energy(ep.transitions);
  return ep;
}

// Episode whose step t adds increments[t] to the contact energy.
inline Episode energy_episode(const Vec& increments) {
  Episode ep;
  for (double inc : increments) {
    Transition tr;
    tr.state.assign(layout::kSize, 0.0);
    tr.next_state.assign(layout::kSize, 0.0);
    tr.action.assign(4, 0.0);
    tr.desired_goal.assign(3, 0.0);
    tr.achieved_goal.assign(3, 0.0);
    tr.reward = -1.0;
    tr.touch_left = 1.0;
    tr.touch_right = 1.0;
    tr.object_displacement = inc / 2.0;
    ep.transitions.push_back(tr);
  }
  ep.cumulative_contact_energy = brute_force_energy(ep.transitions);
  return ep;
}

inline double sigmoid(double x, double k, double temperature) {
  return k / (1.0 + std::exp(-x * temperature));
}

// Per-episode sums first, then normalization by the grand total.
inline Vec two_pass_cebp(const std::vector<Vec>& energies, double k, double temperature) {
  Vec sums;
  for (const Vec& c : energies) {
    long double s = 0.0L;
    for (double x : c) s += sigmoid(x, k, temperature);
    sums.push_back(static_cast<double>(s));
  }
  long double total = 0.0L;
  for (double s : sums) total += s;
  Vec p;
  for (double s : sums) p.push_back(static_cast<double>(s / total));
  return p;
}

// Upper-tail p-value of Pearson's statistic.
inline double chi_square_p(const std::vector<std::size_t>& counts, const Vec& probs) {
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i];
    const double d = static_cast<double>(counts[i]) - e;
    stat += d * d / e;
  }
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("contact_replay_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
