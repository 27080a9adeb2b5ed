#pragma once

#include <stdexcept>
#include <string>

namespace nclab {

// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes or dimensions that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Inputs for which an operation is undefined (zero vector on the sphere, identical means).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// A run or sampler configuration that cannot be executed (empty pools, bad partitions).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// An enumeration whose size exceeds the allowed budget.
class EnumerationTooLarge : public Error {
public:
    using Error::Error;
};

// Non-finite value produced during a numeric computation.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace nclab
