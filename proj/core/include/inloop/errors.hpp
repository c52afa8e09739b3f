#pragma once

#include <stdexcept>
#include <string>

namespace inloop {

// A physical or numerical parameter lies outside its documented domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The feedback loop is unstable, either by analysis or at run time.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stochastic step left the Bloch ball by more than the repair tolerance.
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace inloop
