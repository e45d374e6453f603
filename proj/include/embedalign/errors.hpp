#pragma once

#include <stdexcept>
#include <string>

namespace embedalign {

// Error taxonomy used across the library. CLI maps ParameterError/UsageError
// to exit code 2, everything else to 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

// Bad argument value (negative probability, dim too small, ...).
struct ParameterError : Error {
    using Error::Error;
};

// Malformed file header, wrong magic, unknown version.
struct FormatError : Error {
    using Error::Error;
};

// File payload does not match its header (truncation, size mismatch).
struct CorruptionError : Error {
    using Error::Error;
};

// Semantically invalid data (NaN values, label out of range, empty set).
struct DataError : Error {
    using Error::Error;
};

// Operation called in the wrong order (e.g. backward without forward).
struct StateError : Error {
    using Error::Error;
};

// Training diverged or hit a non-finite loss; message carries diagnostics.
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace embedalign
