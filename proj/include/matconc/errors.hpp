#pragma once

#include <stdexcept>
#include <string>

namespace matconc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (bad dimension, s <= 0, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A scalar function was asked to act outside its domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An iterative routine hit its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A matrix offered as Hermitian is too far from its adjoint.
class NotHermitianError : public Error {
public:
    using Error::Error;
};

/// max{|||D|||_1, |||D|||_inf} >= 1.
class DobrushinConditionError : public Error {
public:
    using Error::Error;
};

}  // namespace matconc
