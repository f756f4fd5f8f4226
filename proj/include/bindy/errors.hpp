#pragma once

#include <stdexcept>
#include <string>

namespace bindy {

/// Bad data fed to an operation (non-finite values, shape mismatches, malformed files).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration values (prior parameters out of range, bad enum strings).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown that survived the recovery policy (factorization failure etc.).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bindy
