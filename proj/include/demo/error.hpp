#pragma once

#include <stdexcept>
#include <string>

namespace demo {

// Base class for all library errors. The CLI maps FormatError/ConfigError/
// UsageError to exit code 2 and everything else to exit code 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor extents do not satisfy an operation's contract.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Malformed input file (CSV row, checkpoint blob, ...).
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Inconsistent model/training configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// An API precondition was violated (e.g. backward on a non-scalar node).
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Pearson correlation of a constant sequence; never silently reported as 0.
struct UndefinedCorrelation : Error {
    explicit UndefinedCorrelation(const std::string& msg) : Error(msg) {}
};

// Training aborted (NaN loss); message names the epoch and batch.
struct TrainAbort : Error {
    explicit TrainAbort(const std::string& msg) : Error(msg) {}
};

// Filesystem failure (missing path, unwritable output).
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace demo
