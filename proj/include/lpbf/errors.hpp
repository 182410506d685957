#pragma once

#include <stdexcept>

namespace lpbf {

/// A required input artifact (run, model, dataset) does not exist.
class NotFoundError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training or evaluation produced non-finite numbers.
class NumericError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lpbf
