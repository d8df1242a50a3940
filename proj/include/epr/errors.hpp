#pragma once

#include <stdexcept>
#include <string>

namespace epr {

// Error taxonomy. The CLI maps these onto exit codes: configuration and
// file problems exit 2, numeric failures exit 1, rejection-sampler
// exhaustion exits 3.

struct InvalidParams : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MomentsUndefined : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Singular factor or indefinite matrix; the message names the failing block.
struct SingularError : NumericError {
    using NumericError::NumericError;
};

struct ExhaustedError : std::runtime_error {
    long long tries = 0;
    explicit ExhaustedError(const std::string& what, long long tries_)
        : std::runtime_error(what), tries(tries_) {}
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace epr
