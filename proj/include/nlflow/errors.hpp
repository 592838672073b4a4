#pragma once

#include <stdexcept>
#include <string>

namespace nlflow {

/// Invalid input or configuration (bad grid, mismatched fields, bad descriptor).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The numerics refused to continue: CFL violation, blow-up guard, non-finite state.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ConfigError(message);
}

} // namespace nlflow
