#pragma once

#include <stdexcept>
#include <string>

namespace anderson_pi {

// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed MDP / Q-table file. The message carries the line or field path.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation called on an object in the wrong state (e.g. empty history).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Linear system stayed singular after the full jitter ladder.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double final_jitter)
      : std::runtime_error(what), final_jitter_(final_jitter) {}
  double final_jitter() const noexcept { return final_jitter_; }

 private:
  double final_jitter_;
};

// Reference fixed-point iteration hit its iteration cap.
class OraclePrecisionError : public std::runtime_error {
 public:
  OraclePrecisionError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved_residual() const noexcept { return achieved_; }

 private:
  double achieved_;
};

}  // namespace anderson_pi
