#pragma once

#include <stdexcept>
#include <string>

namespace hetlab {

// Every failure raised by the library derives from Error. The CLI maps the
// three families below onto distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: distributions that do not sum to one, non-square
// matrices, covariances that are not positive definite, bad file rows.
class ValidationError : public Error {
public:
    using Error::Error;
};

// An argument lies outside the mathematical domain of the operation
// (x outside (0,1) for a density, q = 0 for a Gaussian, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// The inputs are valid but the computation cannot produce a trustworthy
// number: singular denominators, divergent series, exhausted iteration caps.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PrecisionError : public NumericalError {
public:
    PrecisionError(const std::string& what, double partial)
        : NumericalError(what), partial_(partial) {}

    // Best estimate available when the iteration cap was hit.
    double partial_value() const noexcept { return partial_; }

private:
    double partial_;
};

// Bad command-line usage or generator parameters.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace hetlab
