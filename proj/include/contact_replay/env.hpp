#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "contact_replay/core.hpp"
#include "contact_replay/rng.hpp"

namespace contact_replay {

enum class Task { push, pick_and_place, slide };

Task parse_task(std::string_view name);
std::string_view task_name(Task task);

using Vec3 = std::array<double, 3>;

struct Box3 {
  Vec3 lo{};
  Vec3 hi{};

  bool contains(const Vec3& p) const;
  Vec3 clamp(const Vec3& p) const;
};

// Geometry is in meters, forces in newtons. Defaults depend on the task, so
// build configurations with EnvConfig::defaults(task) and override fields.
struct EnvConfig {
  Task task = Task::push;
  double dt = 0.05;
  std::size_t horizon = 50;
  double success_threshold = 0.05;
  double contact_stiffness = 500.0;
  double object_side = 0.04;
  Box3 workspace;       // object stays inside (clamped)
  Box3 gripper_bounds;  // reach of the gripper center
  Box3 object_region;   // initial object placement
  Box3 goal_region;
  Vec3 gripper_start{};
  double friction_coeff = 0.1;
  double max_step = 0.03;
  double gap_max = 0.08;
  double finger_width = 0.02;
  double finger_height = 0.04;
  int substeps = 4;
  // Slide: object speed after a hit, relative to the gripper's normal speed.
  double impulse_gain = 2.0;
  double gravity = 9.81;
  // Pick-and-place: finger penetration while holding the object.
  double hold_depth = 0.002;
  // Minimum initial distance between gripper start and object center.
  double start_clearance = 0.06;
  std::uint64_t rng_seed = 0;

  static EnvConfig defaults(Task task);

  // Throws ConfigError on inconsistent geometry.
  void validate() const;
};

struct EnvState {
  Vec3 gripper_pos{};
  double gripper_gap = 0.0;
  Vec3 object_pos{};
  Vec3 object_vel{};
  Vec3 goal{};
  std::size_t step_count = 0;
  bool grasped = false;
  Vec3 grasp_offset{};
};

struct Observation {
  Vec vector;  // obs_layout
  Vec desired_goal;
  Vec achieved_goal;
};

struct StepResult {
  Observation observation;
  double reward = -1.0;
  double touch_left = 0.0;
  double touch_right = 0.0;
  double object_displacement = 0.0;
  bool done = false;
};

// 0 when ||achieved - goal|| <= threshold, otherwise -1.
double compute_reward(std::span<const double> achieved, std::span<const double> goal,
                      double threshold);

// Penalty contact model: normal force k * depth for non-negative depth.
inline double penalty_force(double stiffness, double depth) {
  return depth > 0.0 ? stiffness * depth : 0.0;
}

struct Penetration {
  double depth = 0.0;  // 0 when the boxes are separated
  int axis = -1;       // axis of minimum overlap
  double sign = 1.0;   // direction that pushes box b out of box a
};

// Minimum-translation penetration of axis-aligned box b into box a. With
// planar = true only the x and y axes are considered.
Penetration box_penetration(const Vec3& center_a, const Vec3& half_a, const Vec3& center_b,
                            const Vec3& half_b, bool planar);

class Env {
 public:
  explicit Env(EnvConfig config);

  Observation reset(std::uint64_t seed);
  Observation reset() { return reset(config_.rng_seed); }

  // Action components are (dx, dy, dz, gripper) and are clamped to [-1, 1].
  StepResult step(std::span<const double> action);

  const EnvState& state() const { return state_; }
  // Replaces the simulator state; used by tests to stage contact scenarios.
  void set_state(const EnvState& state) { state_ = state; }
  const EnvConfig& config() const { return config_; }
  Observation observe() const;

 private:
  Vec3 pad_center(int pad) const;
  Vec3 pad_half() const;
  Vec3 object_half() const;
  void substep_planar(const Vec3& delta, double sub_dt, std::array<double, 2>& force);
  void substep_pick(const Vec3& delta, double gap_delta, std::array<double, 2>& force);
  void push_object(int axis, double amount);

  EnvConfig config_;
  EnvState state_;
  bool has_reset_ = false;
};

}  // namespace contact_replay
