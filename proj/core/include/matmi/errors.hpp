#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace matmi {

/// A parameter value left the admissible interval of an anisotropy family.
class OutOfRangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Configuration problems (unknown keys, malformed values). The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver gave up. Carries the history of the monitored quantity
/// (residual norms for Krylov solvers, change norms for Picard loops).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Integrity failure when reading a serialized payload.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace matmi
