#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ned {

/// Base class for all library errors. `kind()` is a stable machine-readable
/// tag; `what()` carries the human-readable message with offending values.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Invalid or inconsistent user-supplied configuration (bad JSON, missing
/// keys, out-of-range parameters). CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

/// Precondition violation on an otherwise well-formed call (argument outside
/// the documented domain, mismatched grids, unsupported utility/agent combo).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain", msg) {}
    DomainError(std::string kind, const std::string& msg) : Error(std::move(kind), msg) {}
};

/// Filesystem failure while reading or writing artifacts (unopenable path,
/// short write). CLI maps this to exit code 4.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

/// Iterative solver failure. Carries the residual history so callers can
/// persist diagnostics before aborting. CLI maps this to exit code 3.
class SolverError : public Error {
public:
    SolverError(std::string kind, const std::string& msg, std::vector<double> residuals = {})
        : Error(std::move(kind), msg), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

}  // namespace ned
