#pragma once

#include <stdexcept>
#include <string>

namespace actbench {

// Shape or size disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside its documented domain (bad rate, bad label, ...).
struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A name (activation, optimizer, initializer, ...) that is not registered.
struct UnknownNameError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Backward called without a recorded forward pass, or called twice.
struct GraphStateError : std::logic_error {
  using std::logic_error::logic_error;
};

// Aggregation over an empty trial set.
struct AggregationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Regression design matrix is rank deficient even after the ridge fallback,
// or there are fewer records than columns.
struct SingularDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when training hits a non-finite loss or gradient.  Carries the
// 1-based epoch index where the blow-up happened; the trial runner turns
// this into a diverged result instead of aborting the process.
struct DivergedSignal : std::runtime_error {
  explicit DivergedSignal(int epoch)
      : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch)), epoch(epoch) {}
  int epoch;
};

}  // namespace actbench
