#pragma once

#include <stdexcept>
#include <string>

namespace toruslab {

// Parameter outside its documented domain (bad dimension, exponent < 1, ...).
struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation produced or would produce non-finite values.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grid too coarse for the requested band; refusing to alias silently.
struct AliasingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exponent triple fails the admissibility conditions required by a probe.
struct ClassificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense discretization would exceed the configured matrix budget.
struct SizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixed-point iteration failed to contract.  Carries the worst observed
// ratio between successive update sizes so callers can report it.
struct DivergenceError : std::runtime_error {
    double achieved_ratio;
    explicit DivergenceError(const std::string& what, double ratio)
        : std::runtime_error(what), achieved_ratio(ratio) {}
};

}  // namespace toruslab
