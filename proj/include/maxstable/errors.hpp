#pragma once

#include <stdexcept>
#include <string>

namespace maxstable {

// Base for every error raised by the library. The exit code is what the CLI
// reports when the error escapes a subcommand.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 3; }
};

/// Malformed input text (CSV, JSON, binary panel).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a container invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// A statistical estimator cannot produce a value (e.g. zero spread).
class EstimationError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace maxstable
