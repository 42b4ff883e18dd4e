#pragma once

#include <stdexcept>
#include <string>

namespace qbenders {

/// Matrix or vector dimensions inconsistent with the problem definition.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A solve gave up without a certificate (iteration cap, stalled steps,
/// or multipliers more negative than the clamp threshold).
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

/// The one-stage problem at a queried point has an empty feasible set,
/// i.e. the successor state leaves the controllable region.
class InfeasiblePoint : public std::runtime_error {
 public:
  explicit InfeasiblePoint(const std::string& what) : std::runtime_error(what) {}
};

/// A quantity the theory guarantees (e.g. nonnegative Bellman error)
/// came back violated beyond numerical tolerance.
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace qbenders
