#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pvdiag {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Non-finite or otherwise unusable intermediate value.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, int iteration = -1)
        : Error(what), iteration_(iteration) {}

    /// Iteration at which the failure occurred, -1 when not iterative.
    [[nodiscard]] int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// The avalanche term of the reverse-biased diode equation has a non-positive base.
class SingularityError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Fault vector violates the joint substring-count constraint.
class InfeasibleFault : public Error {
public:
    using Error::Error;
};

/// Bad configuration value or key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class PreprocessError : public Error {
public:
    using Error::Error;
};

/// The bisection reference solver could not bracket a root.
class OracleError : public Error {
public:
    using Error::Error;
};

/// Internal contract between forward state and backward pass was broken.
class ContractError : public Error {
public:
    using Error::Error;
};

}  // namespace pvdiag
