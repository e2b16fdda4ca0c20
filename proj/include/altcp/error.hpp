#pragma once

#include <stdexcept>
#include <string>

namespace altcp {

/// Mismatched dimensions between tensors, factors, or contraction vectors.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A dense materialization would exceed the configured entry budget.
/// The message names the required entry count.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iterate collapsed to (numerically) zero and cannot be normalized.
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parameter combination puts the requested quantity outside its domain
/// (e.g. a trial-count bound whose denominator is nonpositive).
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad command-line or config-file input.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// File read/write failure; the message names the path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace altcp
