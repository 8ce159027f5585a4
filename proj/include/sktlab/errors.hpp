#pragma once

#include <stdexcept>
#include <string>

namespace sktlab {

/// Raised when a kernel support r/n spans fewer grid cells than the configured minimum.
class UnderresolvedKernel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base class of every failure that happens while a solver is advancing in time.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what, double time = 0.0)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class PositivityBreach : public SolverError {
public:
    using SolverError::SolverError;
};

class NonFinite : public SolverError {
public:
    using SolverError::SolverError;
};

class NoContraction : public SolverError {
public:
    using SolverError::SolverError;
};

class MaxIters : public SolverError {
public:
    using SolverError::SolverError;
};

/// Schema violation in a configuration file. `line` is 0 when the key is missing altogether.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, int line, const std::string& msg)
        : std::runtime_error(format(key, line, msg)), key_(key), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& msg) {
        std::string out = "config error";
        if (!key.empty()) out += " at key '" + key + "'";
        if (line > 0) out += " (line " + std::to_string(line) + ")";
        return out + ": " + msg;
    }

    std::string key_;
    int line_;
};

}  // namespace sktlab
