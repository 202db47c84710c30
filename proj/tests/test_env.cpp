#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>

#include "contact_replay/env.hpp"
#include "contact_replay/errors.hpp"
#include "fixtures.hpp"

using namespace contact_replay;

namespace {

bool bit_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const std::array<Task, 3> kTasks = {Task::push, Task::pick_and_place, Task::slide};

}  // namespace

TEST_CASE("default configs validate") {
  for (Task t : kTasks) CHECK_NOTHROW(EnvConfig::defaults(t).validate());
  CHECK(parse_task("pick_and_place") == Task::pick_and_place);
  CHECK_THROWS_AS(parse_task("fly"), ConfigError);
}

TEST_CASE("reset is deterministic per seed") {
  for (Task t : kTasks) {
    Env a(EnvConfig::defaults(t));
    Env b(EnvConfig::defaults(t));
    for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
      const Observation x = a.reset(seed);
      const Observation y = b.reset(seed);
      CHECK(bit_equal(x.vector, y.vector));
      CHECK(bit_equal(x.desired_goal, y.desired_goal));
    }
    CHECK_FALSE(bit_equal(a.reset(1).desired_goal, a.reset(2).desired_goal));
  }
}

TEST_CASE("reset separates object from goal by more than epsilon") {
  for (Task t : kTasks) {
    Env env(EnvConfig::defaults(t));
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      const Observation o = env.reset(seed);
      CHECK(compute_reward(o.achieved_goal, o.desired_goal, env.config().success_threshold) ==
            -1.0);
    }
  }
}

TEST_CASE("goal distribution is uniform over the goal region") {
  const EnvConfig cfg = EnvConfig::defaults(Task::push);
  Env env(cfg);
  std::vector<std::size_t> counts(16, 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Observation o = env.reset(seed);
    int cell[2];
    for (int i = 0; i < 2; ++i) {
      const double u = (o.desired_goal[i] - cfg.goal_region.lo[i]) /
                       (cfg.goal_region.hi[i] - cfg.goal_region.lo[i]);
      cell[i] = std::min(3, static_cast<int>(u * 4.0));
    }
    ++counts[cell[0] * 4 + cell[1]];
  }
  const double p = fixtures::chi_square_p(counts, Vec(16, 1.0 / 16.0));
  CHECK(p > 0.01);
}

TEST_CASE("config validation") {
  EnvConfig cfg = EnvConfig::defaults(Task::push);
  cfg.success_threshold = 1.0;  // larger than the goal-region diagonal
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = EnvConfig::defaults(Task::push);
  cfg.goal_region.hi[0] = cfg.goal_region.lo[0];
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = EnvConfig::defaults(Task::slide);
  cfg.goal_region.lo[0] = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = EnvConfig::defaults(Task::push);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("compute_reward threshold is inclusive") {
  const double eps = 0.05;
  const Vec g = {0.1, -0.05, 0.02};
  CHECK(compute_reward(g, g, eps) == 0.0);
  CHECK(compute_reward(Vec{0.0, 0.0, 0.0}, Vec{0.0, 0.0, eps}, eps) == 0.0);
  CHECK(compute_reward(Vec{0.0, 0.0, 0.0}, Vec{0.0, 2 * eps, 0.0}, eps) == -1.0);
  CHECK_THROWS_AS(compute_reward(Vec{0.0, 0.0}, Vec{0.0, 0.0, 0.0}, eps), ContractViolation);
}

TEST_CASE("penalty model") {
  CHECK(penalty_force(500.0, 0.002) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(penalty_force(500.0, -0.01) == 0.0);
  CHECK(penalty_force(500.0, 0.0) == 0.0);
}

TEST_CASE("pads pressing the object by 2 mm read 1.0 each") {
  EnvConfig cfg = EnvConfig::defaults(Task::push);
  cfg.substeps = 1;
  Env env(cfg);
  env.reset(0);
  EnvState s = env.state();
  s.gripper_pos = {0.0, 0.0, 0.02};
  // pad half-width 0.01 plus object half-side 0.02, minus 2 mm of overlap
  s.object_pos = {0.028, 0.0, 0.02};
  env.set_state(s);
  const StepResult r = env.step(Vec{0.0, 0.0, 0.0, 0.0});
  CHECK(r.touch_left == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.touch_right == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.object_displacement == doctest::Approx(0.002).epsilon(1e-9));
  CHECK(env.state().object_pos[0] == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("no contact when the gripper is far away") {
  for (Task t : kTasks) {
    Env env(EnvConfig::defaults(t));
    env.reset(3);
    EnvState s = env.state();
    s.gripper_pos[0] = s.object_pos[0] > 0.0 ? s.object_pos[0] - 0.2 : s.object_pos[0] + 0.2;
    s.gripper_pos[1] = s.object_pos[1];
    env.set_state(s);
    Rng rng(9);
    for (int i = 0; i < 3; ++i) {
      const Vec a = {fixtures::unif(rng, -1, 1), fixtures::unif(rng, -1, 1),
                     fixtures::unif(rng, -1, 1), fixtures::unif(rng, -1, 1)};
      const StepResult r = env.step(a);
      CHECK(r.touch_left == 0.0);
      CHECK(r.touch_right == 0.0);
      CHECK(r.object_displacement == 0.0);
    }
  }
}

TEST_CASE("zero actions never move the object") {
  for (Task t : {Task::push, Task::pick_and_place}) {
    Env env(EnvConfig::defaults(t));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      env.reset(seed);
      for (std::size_t i = 0; i < env.config().horizon; ++i) {
        const StepResult r = env.step(Vec{0.0, 0.0, 0.0, 0.0});
        CHECK(r.object_displacement == 0.0);
        CHECK(r.reward == -1.0);
      }
    }
  }
}

TEST_CASE("trajectories are deterministic and touch is non-negative") {
  for (Task t : kTasks) {
    Env a(EnvConfig::defaults(t));
    Env b(EnvConfig::defaults(t));
    a.reset(5);
    b.reset(5);
    Rng rng(6);
    // Head straight for the object to get contact.
    for (std::size_t i = 0; i < a.config().horizon; ++i) {
      const EnvState& s = a.state();
      Vec act = {std::clamp((s.object_pos[0] - s.gripper_pos[0]) * 40.0, -1.0, 1.0),
                 std::clamp((s.object_pos[1] - s.gripper_pos[1]) * 40.0, -1.0, 1.0),
                 std::clamp((s.object_pos[2] - s.gripper_pos[2]) * 40.0, -1.0, 1.0),
                 fixtures::unif(rng, -1, 1)};
      const StepResult x = a.step(act);
      const StepResult y = b.step(act);
      CHECK(bit_equal(x.observation.vector, y.observation.vector));
      CHECK(x.touch_left == y.touch_left);
      CHECK(x.touch_right == y.touch_right);
      CHECK(x.touch_left >= 0.0);
      CHECK(x.touch_right >= 0.0);
      CHECK(a.config().workspace.contains(a.state().object_pos));
      CHECK(a.state().gripper_gap >= 0.0);
      CHECK(a.state().gripper_gap <= a.config().gap_max);
      CHECK(x.done == (i + 1 == a.config().horizon));
    }
  }
}

TEST_CASE("pushing produces graded contact force") {
  Env env(EnvConfig::defaults(Task::push));
  env.reset(11);
  double total_energy = 0.0;
  for (std::size_t i = 0; i < env.config().horizon; ++i) {
    const EnvState& s = env.state();
    const Vec act = {std::clamp((s.object_pos[0] - s.gripper_pos[0]) * 40.0, -1.0, 1.0),
                     std::clamp((s.object_pos[1] - s.gripper_pos[1]) * 40.0, -1.0, 1.0), 0.0, 0.0};
    const StepResult r = env.step(act);
    total_energy += (r.touch_left + r.touch_right) * r.object_displacement;
  }
  CHECK(total_energy > 0.0);
}

TEST_CASE("step contract") {
  Env env(EnvConfig::defaults(Task::push));
  CHECK_THROWS_AS(env.step(Vec{0, 0, 0, 0}), ContractViolation);
  env.reset(0);
  CHECK_THROWS_AS(env.step(Vec{NAN, 0, 0, 0}), ContractViolation);
  CHECK_THROWS_AS(env.step(Vec{0, 0, 0}), ContractViolation);
  for (std::size_t i = 0; i < env.config().horizon; ++i) env.step(Vec{0, 0, 0, 0});
  CHECK_THROWS_AS(env.step(Vec{0, 0, 0, 0}), ContractViolation);
}

TEST_CASE("grasped object follows the gripper and reports holding force") {
  Env env(EnvConfig::defaults(Task::pick_and_place));
  env.reset(4);
  EnvState s = env.state();
  s.gripper_pos = {s.object_pos[0], s.object_pos[1], s.object_pos[2]};
  env.set_state(s);
  // close the fingers on the object
  for (int i = 0; i < 4; ++i) env.step(Vec{0.0, 0.0, 0.0, -1.0});
  CHECK(env.state().grasped);
  const double z0 = env.state().object_pos[2];
  StepResult r;
  for (int i = 0; i < 3; ++i) r = env.step(Vec{0.0, 0.0, 1.0, -1.0});
  CHECK(env.state().object_pos[2] > z0 + 0.05);
  CHECK(r.touch_left > 0.0);
  CHECK(r.touch_right > 0.0);
  // open: the object drops back to the table
  for (int i = 0; i < 4; ++i) env.step(Vec{0.0, 0.0, 0.0, 1.0});
  CHECK_FALSE(env.state().grasped);
  CHECK(env.state().object_pos[2] == doctest::Approx(env.config().object_side / 2.0));
}

TEST_CASE("slide contact is brief and the object keeps moving") {
  Env env(EnvConfig::defaults(Task::slide));
  env.reset(2);
  EnvState s = env.state();
  s.object_pos = {0.1, 0.0, s.object_pos[2]};
  s.gripper_pos = {0.05, 0.0, s.gripper_pos[2]};
  env.set_state(s);
  int contact_steps = 0;
  double travelled = 0.0;
  for (std::size_t i = 0; i < env.config().horizon; ++i) {
    const Vec act = i < 3 ? Vec{1.0, 0.0, 0.0, 0.0} : Vec{-1.0, 0.0, 0.0, 0.0};
    const StepResult r = env.step(act);
    if (r.touch_left + r.touch_right > 0.0) ++contact_steps;
    travelled += r.object_displacement;
  }
  CHECK(contact_steps >= 1);
  CHECK(contact_steps <= 3);
  CHECK(env.state().object_pos[0] > 0.25);
  CHECK(travelled > 0.15);
  CHECK(env.state().object_vel[0] == 0.0);
}
