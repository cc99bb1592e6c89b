#pragma once

#include <stdexcept>
#include <string>

namespace fsi {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (mesh files, configs, mismatched arrays).
class InputError : public Error {
public:
    using Error::Error;
};

/// A triangle with non-positive Jacobian determinant.
class TanglingError : public Error {
public:
    TanglingError(const std::string& what, int triangle)
        : Error(what + " (triangle " + std::to_string(triangle) + ")"), triangle_(triangle) {}
    int triangle() const { return triangle_; }

private:
    int triangle_;
};

/// Linear or nonlinear solver failure.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace fsi
