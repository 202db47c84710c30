#pragma once

#include <stdexcept>
#include <string>

namespace contact_replay {

// Precondition broken by the caller (bad shapes, wrong horizon, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when training produces NaN/Inf and the run cannot continue.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace contact_replay
