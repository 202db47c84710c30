#include "contact_replay/env.hpp"

#include <algorithm>
#include <cmath>

#include "contact_replay/errors.hpp"

namespace contact_replay {

namespace {

constexpr int kMaxResetAttempts = 10000;

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 sub3(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 sample_box(const Box3& box, Rng& rng) {
  Vec3 p{};
  for (int i = 0; i < 3; ++i) {
    p[i] = box.hi[i] > box.lo[i] ? uniform(rng, box.lo[i], box.hi[i]) : box.lo[i];
  }
  return p;
}

bool box_inside(const Box3& inner, const Box3& outer) {
  for (int i = 0; i < 3; ++i) {
    if (inner.lo[i] < outer.lo[i] || inner.hi[i] > outer.hi[i]) return false;
  }
  return true;
}

Box3 planar_box(double x0, double x1, double y0, double y1, double z) {
  return Box3{{x0, y0, z}, {x1, y1, z}};
}

}  // namespace

Task parse_task(std::string_view name) {
  if (name == "push") return Task::push;
  if (name == "pick_and_place") return Task::pick_and_place;
  if (name == "slide") return Task::slide;
  throw ConfigError("unknown task '" + std::string(name) +
                    "' (expected push, pick_and_place or slide)");
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::push:
      return "push";
    case Task::pick_and_place:
      return "pick_and_place";
    case Task::slide:
      return "slide";
  }
  return "push";
}

bool Box3::contains(const Vec3& p) const {
  for (int i = 0; i < 3; ++i) {
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  }
  return true;
}

Vec3 Box3::clamp(const Vec3& p) const {
  return {std::clamp(p[0], lo[0], hi[0]), std::clamp(p[1], lo[1], hi[1]),
          std::clamp(p[2], lo[2], hi[2])};
}

EnvConfig EnvConfig::defaults(Task task) {
  EnvConfig c;
  c.task = task;
  const double rest_z = c.object_side / 2.0;
  switch (task) {
    case Task::push:
      c.workspace = planar_box(-0.3, 0.3, -0.3, 0.3, rest_z);
      c.gripper_bounds = c.workspace;
      c.object_region = planar_box(-0.15, 0.15, -0.15, 0.15, rest_z);
      c.goal_region = c.object_region;
      c.gripper_start = {0.0, 0.0, rest_z};
      break;
    case Task::slide:
      c.workspace = planar_box(-0.3, 0.9, -0.3, 0.3, rest_z);
      c.gripper_bounds = planar_box(-0.3, 0.15, -0.3, 0.3, rest_z);
      c.object_region = planar_box(0.07, 0.12, -0.1, 0.1, rest_z);
      c.goal_region = planar_box(0.4, 0.8, -0.2, 0.2, rest_z);
      c.gripper_start = {0.0, 0.0, rest_z};
      break;
    case Task::pick_and_place:
      c.workspace = Box3{{-0.3, -0.3, rest_z}, {0.3, 0.3, 0.4}};
      c.gripper_bounds = Box3{{-0.3, -0.3, c.finger_height / 2.0}, {0.3, 0.3, 0.4}};
      c.object_region = planar_box(-0.15, 0.15, -0.15, 0.15, rest_z);
      c.goal_region = Box3{{-0.15, -0.15, rest_z}, {0.15, 0.15, 0.2}};
      c.gripper_start = {0.0, 0.0, 0.12};
      break;
  }
  return c;
}

void EnvConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("env: " + msg); };
  if (!(dt > 0.0)) fail("dt must be positive");
  if (horizon == 0) fail("horizon must be positive");
  if (!(success_threshold > 0.0)) fail("success_threshold must be positive");
  if (!(contact_stiffness > 0.0)) fail("contact_stiffness must be positive");
  if (!(object_side > 0.0)) fail("object_side must be positive");
  if (!(max_step > 0.0)) fail("max_step must be positive");
  if (substeps < 1) fail("substeps must be >= 1");
  if (!(finger_width > 0.0) || !(finger_height > 0.0)) fail("finger dimensions must be positive");
  if (task == Task::slide && !(friction_coeff > 0.0)) fail("friction_coeff must be positive");
  if (task == Task::pick_and_place && gap_max < object_side) {
    fail("gap_max must be at least object_side to allow grasping");
  }
  for (const Box3* box : {&workspace, &gripper_bounds, &object_region, &goal_region}) {
    for (int i = 0; i < 3; ++i) {
      if (box->lo[i] > box->hi[i]) fail("box with lo > hi");
    }
  }
  const int goal_axes = task == Task::pick_and_place ? 3 : 2;
  for (int i = 0; i < goal_axes; ++i) {
    if (!(goal_region.hi[i] > goal_region.lo[i])) fail("goal_region has zero volume");
  }
  const double diameter = norm3(sub3(goal_region.hi, goal_region.lo));
  if (success_threshold > diameter) {
    fail("success_threshold exceeds the goal_region diameter; no valid reset exists");
  }
  if (!box_inside(object_region, workspace)) fail("object_region must lie inside workspace");
  if (task == Task::slide) {
    if (!(goal_region.lo[0] > gripper_bounds.hi[0])) {
      fail("slide goal_region must lie outside the gripper reach");
    }
    if (!box_inside(goal_region, workspace)) fail("goal_region must lie inside workspace");
  } else if (!box_inside(goal_region, workspace)) {
    fail("goal_region must lie inside workspace");
  }
}

double compute_reward(std::span<const double> achieved, std::span<const double> goal,
                      double threshold) {
  require(achieved.size() == goal.size(), "compute_reward: goal length mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < goal.size(); ++i) {
    const double d = achieved[i] - goal[i];
    sq += d * d;
  }
  return std::sqrt(sq) <= threshold ? 0.0 : -1.0;
}

Penetration box_penetration(const Vec3& center_a, const Vec3& half_a, const Vec3& center_b,
                            const Vec3& half_b, bool planar) {
  Penetration pen;
  const int axes = planar ? 2 : 3;
  double best = 0.0;
  for (int i = 0; i < axes; ++i) {
    const double d = center_b[i] - center_a[i];
    const double overlap = half_a[i] + half_b[i] - std::abs(d);
    if (overlap <= 0.0) return Penetration{};
    if (pen.axis < 0 || overlap < best) {
      best = overlap;
      pen.axis = i;
      pen.sign = d < 0.0 ? -1.0 : 1.0;
    }
  }
  pen.depth = best;
  return pen;
}

Env::Env(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

Vec3 Env::pad_half() const {
  return {config_.finger_width / 2.0, config_.finger_width / 2.0, config_.finger_height / 2.0};
}

Vec3 Env::object_half() const {
  const double h = config_.object_side / 2.0;
  return {h, h, h};
}

// Pad 0 is the left finger (+y side), pad 1 the right finger (-y side).
Vec3 Env::pad_center(int pad) const {
  const double offset = state_.gripper_gap / 2.0 + config_.finger_width / 2.0;
  Vec3 c = state_.gripper_pos;
  c[1] += pad == 0 ? offset : -offset;
  return c;
}

Observation Env::reset(std::uint64_t seed) {
  Rng rng(seed);
  EnvState s;
  s.goal = sample_box(config_.goal_region, rng);
  const Vec3 start = config_.gripper_start;
  bool placed = false;
  for (int attempt = 0; attempt < kMaxResetAttempts && !placed; ++attempt) {
    s.object_pos = sample_box(config_.object_region, rng);
    const double to_goal = norm3(sub3(s.object_pos, s.goal));
    const double dx = s.object_pos[0] - start[0];
    const double dy = s.object_pos[1] - start[1];
    placed = to_goal > config_.success_threshold &&
             std::sqrt(dx * dx + dy * dy) >= config_.start_clearance;
  }
  if (!placed) throw ConfigError("env: could not place object away from goal and gripper");
  s.gripper_pos = start;
  s.gripper_gap = config_.task == Task::pick_and_place ? config_.gap_max : 0.0;
  state_ = s;
  has_reset_ = true;
  return observe();
}

Observation Env::observe() const {
  namespace L = obs_layout;
  Observation o;
  o.vector.assign(L::kSize, 0.0);
  for (int i = 0; i < 3; ++i) {
    o.vector[L::kGripperPos + i] = state_.gripper_pos[i];
    o.vector[L::kObjectPos + i] = state_.object_pos[i];
    o.vector[L::kObjectVel + i] = state_.object_vel[i];
    o.vector[L::kObjectRelPos + i] = state_.object_pos[i] - state_.gripper_pos[i];
  }
  o.vector[L::kGripperGap] = state_.gripper_gap;
  o.desired_goal.assign(state_.goal.begin(), state_.goal.end());
  o.achieved_goal.assign(state_.object_pos.begin(), state_.object_pos.end());
  return o;
}

void Env::push_object(int axis, double amount) {
  const double before = state_.object_pos[axis];
  state_.object_pos[axis] += amount;
  state_.object_pos = config_.workspace.clamp(state_.object_pos);
  const double moved = state_.object_pos[axis] - before;
  // Whatever the object could not absorb (wall contact) blocks the gripper.
  state_.gripper_pos[axis] -= amount - moved;
}

void Env::substep_planar(const Vec3& delta, double sub_dt, std::array<double, 2>& force) {
  const Vec3 old_gripper = state_.gripper_pos;
  Vec3 target = {old_gripper[0] + delta[0], old_gripper[1] + delta[1], old_gripper[2]};
  state_.gripper_pos = config_.gripper_bounds.clamp(target);
  const Vec3 gripper_vel = {(state_.gripper_pos[0] - old_gripper[0]) / sub_dt,
                            (state_.gripper_pos[1] - old_gripper[1]) / sub_dt, 0.0};

  std::array<Penetration, 2> pens;
  for (int p = 0; p < 2; ++p) {
    pens[p] = box_penetration(pad_center(p), pad_half(), state_.object_pos, object_half(), true);
    force[p] += penalty_force(config_.contact_stiffness, pens[p].depth);
  }

  if (config_.task == Task::slide) {
    const Penetration& deepest = pens[0].depth >= pens[1].depth ? pens[0] : pens[1];
    if (deepest.depth > 0.0) {
      const double normal_speed = gripper_vel[deepest.axis] * deepest.sign;
      if (normal_speed > 0.0) {
        state_.object_vel = {0.0, 0.0, 0.0};
        state_.object_vel[deepest.axis] = config_.impulse_gain * normal_speed * deepest.sign;
      }
    }
  }

  for (int p = 0; p < 2; ++p) {
    const Penetration pen =
        box_penetration(pad_center(p), pad_half(), state_.object_pos, object_half(), true);
    if (pen.depth > 0.0) push_object(pen.axis, pen.sign * pen.depth);
  }

  if (config_.task == Task::slide) {
    Vec3& v = state_.object_vel;
    for (int i = 0; i < 2; ++i) state_.object_pos[i] += v[i] * sub_dt;
    const double speed = std::hypot(v[0], v[1]);
    if (speed > 0.0) {
      const double decay =
          std::max(0.0, 1.0 - config_.friction_coeff * sub_dt * config_.gravity / speed);
      v[0] *= decay;
      v[1] *= decay;
    }
    const Vec3 clamped = config_.workspace.clamp(state_.object_pos);
    for (int i = 0; i < 2; ++i) {
      if (clamped[i] != state_.object_pos[i]) v[i] = 0.0;
    }
    state_.object_pos = clamped;
  }
}

void Env::substep_pick(const Vec3& delta, double gap_delta, std::array<double, 2>& force) {
  const double k = config_.contact_stiffness;
  const double side = config_.object_side;
  state_.gripper_gap = std::clamp(state_.gripper_gap + gap_delta, 0.0, config_.gap_max);

  Vec3 target = {state_.gripper_pos[0] + delta[0], state_.gripper_pos[1] + delta[1],
                 state_.gripper_pos[2] + delta[2]};
  const double floor_z = config_.gripper_bounds.lo[2];
  if (target[2] < floor_z) {
    // Fingers pressed into the table.
    const double depth = floor_z - target[2];
    force[0] += penalty_force(k, depth);
    force[1] += penalty_force(k, depth);
  }
  state_.gripper_pos = config_.gripper_bounds.clamp(target);

  auto hold = [&] {
    state_.gripper_gap = std::max(state_.gripper_gap, side - 2.0 * config_.hold_depth);
    const double depth = (side - state_.gripper_gap) / 2.0;
    force[0] += penalty_force(k, depth);
    force[1] += penalty_force(k, depth);
  };

  if (state_.grasped) {
    if (state_.gripper_gap >= side) {
      state_.grasped = false;
    } else {
      hold();
      const Vec3& g = state_.gripper_pos;
      const Vec3& off = state_.grasp_offset;
      state_.object_pos = config_.workspace.clamp({g[0] + off[0], g[1] + off[1], g[2] + off[2]});
    }
  }

  if (!state_.grasped) {
    std::array<Penetration, 2> pens;
    for (int p = 0; p < 2; ++p) {
      pens[p] =
          box_penetration(pad_center(p), pad_half(), state_.object_pos, object_half(), false);
    }
    const bool squeezed = pens[0].depth > 0.0 && pens[1].depth > 0.0 && pens[0].axis == 1 &&
                          pens[1].axis == 1 && pens[0].sign < 0.0 && pens[1].sign > 0.0 &&
                          state_.gripper_gap < side;
    if (squeezed) {
      state_.grasped = true;
      hold();
      const Vec3& g = state_.gripper_pos;
      state_.grasp_offset = {state_.object_pos[0] - g[0], 0.0, state_.object_pos[2] - g[2]};
      state_.object_pos[1] = g[1];
    } else {
      for (int p = 0; p < 2; ++p) force[p] += penalty_force(k, pens[p].depth);
      for (int p = 0; p < 2; ++p) {
        const Penetration pen =
            box_penetration(pad_center(p), pad_half(), state_.object_pos, object_half(), false);
        if (pen.depth <= 0.0) continue;
        if (pen.axis == 2) {
          // Pressing on the object's top face: the table holds the object,
          // so the gripper is stopped instead.
          state_.gripper_pos[2] -= pen.sign * pen.depth;
        } else {
          push_object(pen.axis, pen.sign * pen.depth);
        }
      }
      // Unsupported objects drop back to the table.
      state_.object_pos[2] = config_.workspace.lo[2];
    }
  }
}

StepResult Env::step(std::span<const double> action) {
  require(has_reset_, "env: step called before reset");
  require(state_.step_count < config_.horizon, "env: step called after episode end");
  require(action.size() == obs_layout::kActionSize, "env: action must have 4 components");
  std::array<double, 4> a{};
  for (std::size_t i = 0; i < 4; ++i) {
    require(std::isfinite(action[i]), "env: non-finite action component");
    a[i] = std::clamp(action[i], -1.0, 1.0);
  }

  const Vec3 prev_object = state_.object_pos;
  const int n = config_.substeps;
  const double sub_dt = config_.dt / n;
  const bool lift = config_.task == Task::pick_and_place;
  const Vec3 delta = {config_.max_step * a[0] / n, config_.max_step * a[1] / n,
                      lift ? config_.max_step * a[2] / n : 0.0};
  std::array<double, 2> force{0.0, 0.0};
  for (int s = 0; s < n; ++s) {
    if (lift) {
      substep_pick(delta, config_.max_step * a[3] / n, force);
    } else {
      substep_planar(delta, sub_dt, force);
    }
  }

  const Vec3 moved = sub3(state_.object_pos, prev_object);
  if (config_.task != Task::slide) {
    for (int i = 0; i < 3; ++i) state_.object_vel[i] = moved[i] / config_.dt;
  }
  ++state_.step_count;

  StepResult r;
  r.observation = observe();
  r.touch_left = force[0] / n;
  r.touch_right = force[1] / n;
  r.object_displacement = norm3(moved);
  r.reward = compute_reward(r.observation.achieved_goal, r.observation.desired_goal,
                            config_.success_threshold);
  r.done = state_.step_count == config_.horizon;
  return r;
}

}  // namespace contact_replay
