#include "contact_replay/core.hpp"

#include <stdexcept>
#include <string>

#include "contact_replay/binary_io.hpp"
#include "contact_replay/errors.hpp"

namespace contact_replay {

namespace {
constexpr std::string_view kBufferMagic = "CRBUF";
constexpr std::uint32_t kBufferFormatVersion = 1;
}  // namespace

std::span<const double, 3> object_position(std::span<const double> observation) {
  require(observation.size() == obs_layout::kSize, "observation has wrong length");
  return observation.subspan<obs_layout::kObjectPos, 3>();
}

std::span<const double, 3> object_velocity(std::span<const double> observation) {
  require(observation.size() == obs_layout::kSize, "observation has wrong length");
  return observation.subspan<obs_layout::kObjectVel, 3>();
}

ReplayBuffer::ReplayBuffer(std::size_t horizon, std::size_t capacity)
    : horizon_(horizon), capacity_(capacity) {
  require(horizon > 0, "replay buffer horizon must be positive");
  require(capacity > 0, "replay buffer capacity must be positive");
}

std::uint64_t ReplayBuffer::store_episode(Episode ep) {
  require(ep.transitions.size() == horizon_,
          "episode has " + std::to_string(ep.transitions.size()) +
              " transitions, buffer horizon is " + std::to_string(horizon_));
  require(ep.cumulative_contact_energy.size() == horizon_,
          "episode contact energy length does not match horizon");
  ep.episode_id = next_id_++;
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(ep));
  return episodes_.back().episode_id;
}

const Transition& ReplayBuffer::get_transition(std::size_t episode_index, std::size_t t) const {
  if (episode_index >= episodes_.size()) {
    throw std::out_of_range("episode index " + std::to_string(episode_index) +
                            " out of range (size " + std::to_string(episodes_.size()) + ")");
  }
  if (t >= horizon_) {
    throw std::out_of_range("timestep " + std::to_string(t) + " out of range (horizon " +
                            std::to_string(horizon_) + ")");
  }
  return episodes_[episode_index].transitions[t];
}

const Episode& ReplayBuffer::episode(std::size_t index) const {
  if (index >= episodes_.size()) throw std::out_of_range("episode index out of range");
  return episodes_[index];
}

Episode& ReplayBuffer::episode(std::size_t index) {
  if (index >= episodes_.size()) throw std::out_of_range("episode index out of range");
  return episodes_[index];
}

void ReplayBuffer::save(std::ostream& out) const {
  BinaryWriter w(out);
  w.write_magic(kBufferMagic);
  w.write<std::uint32_t>(kBufferFormatVersion);
  w.write<std::uint64_t>(horizon_);
  w.write<std::uint64_t>(capacity_);
  w.write<std::uint64_t>(episodes_.size());
  w.write<std::uint64_t>(next_id_);
  for (const Episode& ep : episodes_) {
    w.write<std::uint64_t>(ep.episode_id);
    w.write<double>(ep.priority);
    w.write<std::uint8_t>(ep.td_evaluated ? 1 : 0);
    w.write_vector(ep.cumulative_contact_energy);
    for (const Transition& tr : ep.transitions) {
      w.write_vector(tr.state);
      w.write_vector(tr.action);
      w.write<double>(tr.reward);
      w.write_vector(tr.next_state);
      w.write_vector(tr.desired_goal);
      w.write_vector(tr.achieved_goal);
      w.write<double>(tr.touch_left);
      w.write<double>(tr.touch_right);
      w.write<double>(tr.object_displacement);
    }
  }
  w.check();
}

ReplayBuffer ReplayBuffer::load(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(kBufferMagic, "replay buffer snapshot");
  auto version = r.read<std::uint32_t>("format_version");
  if (version != kBufferFormatVersion) {
    throw IoError("unsupported replay buffer format_version " + std::to_string(version));
  }
  auto horizon = r.read<std::uint64_t>("H");
  auto capacity = r.read<std::uint64_t>("capacity");
  auto count = r.read<std::uint64_t>("count");
  auto next_id = r.read<std::uint64_t>("next_id");
  if (horizon == 0 || capacity == 0 || count > capacity) {
    throw IoError("inconsistent replay buffer header (H=" + std::to_string(horizon) +
                  ", capacity=" + std::to_string(capacity) + ", count=" + std::to_string(count) +
                  ")");
  }
  ReplayBuffer buffer(horizon, capacity);
  std::uint64_t last_id = 0;
  for (std::uint64_t e = 0; e < count; ++e) {
    Episode ep;
    ep.episode_id = r.read<std::uint64_t>("episode_id");
    if (e > 0 && ep.episode_id <= last_id) throw IoError("episode ids are not increasing");
    last_id = ep.episode_id;
    ep.priority = r.read<double>("priority");
    ep.td_evaluated = r.read<std::uint8_t>("td_evaluated") != 0;
    ep.cumulative_contact_energy = r.read_vector("contact energy");
    if (ep.cumulative_contact_energy.size() != horizon) {
      throw IoError("contact energy length does not match H");
    }
    ep.transitions.resize(horizon);
    for (Transition& tr : ep.transitions) {
      tr.state = r.read_vector("state");
      tr.action = r.read_vector("action");
      tr.reward = r.read<double>("reward");
      tr.next_state = r.read_vector("next_state");
      tr.desired_goal = r.read_vector("desired_goal");
      tr.achieved_goal = r.read_vector("achieved_goal");
      tr.touch_left = r.read<double>("touch_left");
      tr.touch_right = r.read<double>("touch_right");
      tr.object_displacement = r.read<double>("object_displacement");
    }
    buffer.episodes_.push_back(std::move(ep));
  }
  if (count > 0 && next_id <= last_id) throw IoError("next_id precedes stored episode ids");
  buffer.next_id_ = next_id;
  return buffer;
}

}  // namespace contact_replay
