#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "contact_replay/env.hpp"
#include "contact_replay/errors.hpp"
#include "contact_replay/her.hpp"
#include "fixtures.hpp"

using namespace contact_replay;

namespace {

constexpr double kEps = 0.05;

ReplayBuffer fixture_buffer(std::size_t horizon, std::size_t episodes, std::uint64_t seed) {
  Rng rng(seed);
  ReplayBuffer buf(horizon, episodes);
  for (std::size_t i = 0; i < episodes; ++i) buf.store_episode(fixtures::random_episode(rng, horizon, 0.3));
  return buf;
}

bool same(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Euclidean check written out independently of compute_reward.
double reward_oracle(const Vec& achieved, const Vec& goal) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < achieved.size(); ++i) d2 += (achieved[i] - goal[i]) * (achieved[i] - goal[i]);
  return d2 <= kEps * kEps ? 0.0 : -1.0;
}

}  // namespace

TEST_CASE("strategy none returns stored transitions unchanged") {
  const ReplayBuffer buf = fixture_buffer(10, 5, 1);
  std::vector<SampleIndex> idx;
  for (std::size_t e = 0; e < 5; ++e)
    for (std::size_t t = 0; t < 10; ++t) idx.push_back({e, t});
  RelabelConfig cfg;
  cfg.strategy = RelabelStrategy::none;
  Rng rng(2);
  std::vector<std::uint8_t> flags;
  const auto out = relabel_minibatch_indices(buf, idx, cfg, kEps, rng, &flags);
  REQUIRE(out.size() == idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Transition& a = out[i];
    const Transition& b = buf.get_transition(idx[i].episode, idx[i].t);
    CHECK(same(a.desired_goal, b.desired_goal));
    CHECK(std::memcmp(&a.reward, &b.reward, sizeof(double)) == 0);
    CHECK(flags[i] == 0);
  }
}

TEST_CASE("strategy final at the last step always succeeds") {
  const ReplayBuffer buf = fixture_buffer(8, 6, 3);
  RelabelConfig cfg;
  cfg.strategy = RelabelStrategy::final;
  Rng rng(4);
  std::vector<SampleIndex> idx(2000, SampleIndex{0, 7});
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i].episode = i % 6;
  std::vector<std::uint8_t> flags;
  const auto out = relabel_minibatch_indices(buf, idx, cfg, kEps, rng, &flags);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (flags[i]) {
      CHECK(out[i].reward == 0.0);
      CHECK(same(out[i].desired_goal, out[i].achieved_goal));
    }
  }
}

TEST_CASE("relabel frequency is k/(k+1)") {
  const ReplayBuffer buf = fixture_buffer(10, 3, 5);
  RelabelConfig cfg;
  cfg.replay_k = 4;
  Rng rng(6);
  const std::vector<SampleIndex> idx(100000, SampleIndex{1, 3});
  std::vector<std::uint8_t> flags;
  relabel_minibatch_indices(buf, idx, cfg, kEps, rng, &flags);
  double hits = 0;
  for (auto f : flags) hits += f;
  CHECK(std::abs(hits / 1e5 - 0.8) <= 0.01);
}

TEST_CASE("relabeled goals come from the same episode at or after t") {
  const ReplayBuffer buf = fixture_buffer(12, 4, 7);
  RelabelConfig cfg;
  Rng rng(8);
  std::vector<SampleIndex> idx;
  for (int i = 0; i < 5000; ++i) idx.push_back({static_cast<std::size_t>(i % 4), static_cast<std::size_t>(i % 12)});
  std::vector<std::uint8_t> flags;
  const auto out = relabel_minibatch_indices(buf, idx, cfg, kEps, rng, &flags);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Transition& stored = buf.get_transition(idx[i].episode, idx[i].t);
    CHECK(out[i].reward == reward_oracle(out[i].achieved_goal, out[i].desired_goal));
    CHECK(same(out[i].state, stored.state));
    CHECK(same(out[i].next_state, stored.next_state));
    CHECK(same(out[i].action, stored.action));
    CHECK(out[i].touch_left == stored.touch_left);
    CHECK(out[i].touch_right == stored.touch_right);
    if (!flags[i]) continue;
    bool found = false;
    for (std::size_t t = idx[i].t; t < 12 && !found; ++t) {
      found = same(out[i].desired_goal, buf.get_transition(idx[i].episode, t).achieved_goal);
    }
    CHECK(found);
  }
}

TEST_CASE("relabeling never mutates the buffer") {
  ReplayBuffer buf = fixture_buffer(6, 3, 9);
  std::stringstream before;
  buf.save(before);
  RelabelConfig cfg;
  Rng rng(10);
  std::vector<SampleIndex> idx(500, SampleIndex{2, 1});
  relabel_minibatch_indices(buf, idx, cfg, kEps, rng);
  std::stringstream after;
  buf.save(after);
  CHECK(before.str() == after.str());
}

TEST_CASE("relabel config validation") {
  RelabelConfig cfg;
  cfg.replay_k = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.strategy = RelabelStrategy::none;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.relabel_probability() == 0.0);
  CHECK(parse_relabel_strategy("final") == RelabelStrategy::final);
  CHECK_THROWS_AS(parse_relabel_strategy("episode"), ConfigError);
}
