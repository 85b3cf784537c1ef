#pragma once

#include <stdexcept>
#include <string>

namespace mtrack {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input or configuration supplied by the caller. The CLI maps it to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

class NoMovementError : public Error {
public:
    NoMovementError() : Error("no movement recorded") {}
};

class UnderdeterminedError : public Error {
public:
    using Error::Error;
};

// A learner failed to produce a model (non-convergence, degenerate labels).
class FitError : public Error {
public:
    using Error::Error;
};

} // namespace mtrack
