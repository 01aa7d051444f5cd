#pragma once

#include <stdexcept>
#include <string>

namespace flexamg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input rejected by a structural check (program, config, matrix format).
class ValidationError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string &what, std::size_t row)
        : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// A configured size cap (dense entries, grid points) would be exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

} // namespace flexamg
