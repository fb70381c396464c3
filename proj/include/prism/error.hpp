#pragma once

#include <stdexcept>
#include <string>

namespace prism {

// Base of all library errors. DataError maps to CLI exit code 2,
// NumericError to exit code 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct MissingFile : DataError {
    using DataError::DataError;
};

struct ResolutionMismatch : DataError {
    using DataError::DataError;
};

struct PatchTooLarge : DataError {
    using DataError::DataError;
};

struct TooFewSamples : DataError {
    using DataError::DataError;
};

struct DimensionMismatch : DataError {
    using DataError::DataError;
};

struct EmptyEntity : DataError {
    using DataError::DataError;
};

struct IndexOutOfRange : DataError {
    using DataError::DataError;
};

struct MissingDescriptor : DataError {
    using DataError::DataError;
};

struct InfeasibleSpec : DataError {
    using DataError::DataError;
};

struct NonFiniteScore : NumericError {
    using NumericError::NumericError;
};

struct Divergence : NumericError {
    using NumericError::NumericError;
};

} // namespace prism
