#pragma once

#include <stdexcept>
#include <string>

namespace ehrlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid grid, field, state or config parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical guard tripped (instability, wrap-around, ill-defined centroid).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Parse or I/O failure in config or snapshot files.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ehrlab
