#pragma once

#include <stdexcept>
#include <string>

namespace dicelab {

/// Rejected input: bad dimensions, bad probabilities, unsupported options.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The model violates a structural assumption (reducible chain,
/// non-terminating recurrent class, coverage violation).
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical operation failed (singular solve, non-finite update).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A file could not be parsed; message carries the line number when known.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A file parsed but violates a dataset invariant.
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dicelab
