#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

namespace contact_replay {

using Vec = std::vector<double>;

// Fixed observation layout shared by every task. Orientation and angular
// velocity slots are always zero (objects never rotate) but keep the vector
// shaped like the full manipulation state.
namespace obs_layout {
inline constexpr std::size_t kGripperPos = 0;
inline constexpr std::size_t kGripperGap = 3;
inline constexpr std::size_t kObjectPos = 4;
inline constexpr std::size_t kObjectVel = 7;
inline constexpr std::size_t kObjectRelPos = 10;
inline constexpr std::size_t kObjectRot = 13;
inline constexpr std::size_t kObjectAngVel = 16;
inline constexpr std::size_t kSize = 19;
inline constexpr std::size_t kGoalSize = 3;
inline constexpr std::size_t kActionSize = 4;
}  // namespace obs_layout

struct Transition {
  Vec state;
  Vec action;
  double reward = -1.0;
  Vec next_state;
  Vec desired_goal;
  // Achieved goal of next_state, i.e. the object position after the step.
  Vec achieved_goal;
  double touch_left = 0.0;
  double touch_right = 0.0;
  double object_displacement = 0.0;
};

// Object position slice of an observation vector.
std::span<const double, 3> object_position(std::span<const double> observation);
std::span<const double, 3> object_velocity(std::span<const double> observation);

struct Episode {
  std::vector<Transition> transitions;
  // c(e, t): prefix sum of (touch_left + touch_right) * displacement.
  Vec cumulative_contact_energy;
  double priority = 0.0;
  // Set once a TD-error priority has been assigned from an agent update.
  bool td_evaluated = false;
  std::uint64_t episode_id = 0;

  std::size_t horizon() const { return transitions.size(); }
};

// Episode-granular FIFO store. Capacity counts episodes, not transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t horizon, std::size_t capacity);

  // Appends the episode, assigning the next monotone id, and evicts the
  // oldest episode when full. Returns the assigned id.
  std::uint64_t store_episode(Episode ep);

  const Transition& get_transition(std::size_t episode_index, std::size_t t) const;

  const Episode& episode(std::size_t index) const;
  Episode& episode(std::size_t index);

  std::size_t size() const { return episodes_.size(); }
  bool empty() const { return episodes_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t horizon() const { return horizon_; }
  std::uint64_t next_id() const { return next_id_; }

  const std::deque<Episode>& episodes() const { return episodes_; }

  // Versioned binary snapshot; real fields round-trip bit-exactly.
  void save(std::ostream& out) const;
  static ReplayBuffer load(std::istream& in);

 private:
  std::size_t horizon_;
  std::size_t capacity_;
  std::uint64_t next_id_ = 0;
  std::deque<Episode> episodes_;
};

}  // namespace contact_replay
