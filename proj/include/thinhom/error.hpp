#pragma once

#include <stdexcept>
#include <string>

namespace thinhom {

enum class ErrorKind {
    InvalidProfile,
    UnsupportedRegime,
    WrongPath,
    NonConvergence,
    DegenerateMesh,
    Domain,
    Budget,
    Config,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidProfile: return "invalid-profile";
    case ErrorKind::UnsupportedRegime: return "unsupported-regime";
    case ErrorKind::WrongPath: return "wrong-path";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::DegenerateMesh: return "degenerate-mesh";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

/// Every library failure is reported through this type; `kind()` lets the
/// command-line front end map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by the conjugate-gradient solver; carries the last residual.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double residual, int iterations)
        : Error(ErrorKind::NonConvergence, what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Raised when a discretization would exceed the configured element budget.
class BudgetError : public Error {
public:
    BudgetError(const std::string& what, long long required, long long available)
        : Error(ErrorKind::Budget, what), required_(required), available_(available) {}

    long long required() const noexcept { return required_; }
    long long available() const noexcept { return available_; }

private:
    long long required_;
    long long available_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

} // namespace thinhom
