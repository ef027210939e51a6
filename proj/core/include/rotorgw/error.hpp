#pragma once

#include <stdexcept>
#include <string>

namespace rotorgw {

// Input that violates a documented invariant (bad distribution, bad sink set, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A call made in a state where it is not allowed (re-expanding a node,
// stepping from the sink, a scheduler naming an empty vertex, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A hard resource cap (node store or step count) was hit. On finite
// truncations this signals a runaway computation rather than a math event.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rotorgw
