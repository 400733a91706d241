#pragma once

#include <stdexcept>
#include <string>

namespace fedloc {

// Matrix/vector dimension disagreement; the message names the offending operand.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A matrix that must be invertible is numerically singular.
struct SingularError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Information-sharing weights violate beta_i > 0, sum(beta) = 1.
struct InvalidWeightsError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Fusion inputs carry mismatched time indices.
struct StalenessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChainIntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DuplicateIdError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AuthorizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fedloc
