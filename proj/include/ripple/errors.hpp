// errors.hpp — exception hierarchy shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace ripple {

/// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
    config,     // unreadable file, schema or invariant violation in the input
    numerical,  // contract violations of the linear algebra / integrators
    physics,    // convergence and truncation problems, missing resonances
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Argument outside the domain of a formula (m < 1, truncation producing m < 1, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

struct ConfigError : Error {
    ConfigError(std::string key, const std::string& what)
        : Error(ErrorCategory::config, what), key(std::move(key)) {}
    std::string key;  // offending config key ("" when not tied to one)
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

struct PhysicsError : Error {
    explicit PhysicsError(const std::string& what) : Error(ErrorCategory::physics, what) {}
};

inline int exit_code(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::numerical: return 3;
    case ErrorCategory::physics: return 4;
    }
    return 1;
}

}  // namespace ripple
