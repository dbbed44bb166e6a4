#pragma once

#include <stdexcept>
#include <string>

namespace ddpc {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched vector/matrix sizes; messages name both values.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid argument values (bad ranges, wrong call for the problem class).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Operation not allowed in the current buffer/controller mode.
class ModeError : public Error {
public:
    using Error::Error;
};

// Data fails a structural requirement (too short, not persistently exciting).
class DataError : public Error {
public:
    using Error::Error;
};

// Configuration file fails schema or range validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Singular KKT system / loss of strict convexity on the constraint nullspace.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

// Simulation produced a non-finite state.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// QP detected as infeasible; carries a full problem dump for offline triage.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& msg, std::string dump)
        : Error(msg), dump_(std::move(dump)) {}
    const std::string& debug_dump() const { return dump_; }

private:
    std::string dump_;
};

}  // namespace ddpc
