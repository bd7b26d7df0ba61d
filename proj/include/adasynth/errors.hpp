#pragma once

#include <stdexcept>
#include <string>

namespace adasynth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidStateError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// A compressed lane change did not settle within the maneuver time limit.
class ManeuverDivergenceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// The explored abstraction exceeded the configured state cap.
class SizeLimitError : public Error {
public:
    using Error::Error;
};

class LabelingError : public Error {
public:
    using Error::Error;
};

class VerificationError : public Error {
public:
    using Error::Error;
};

class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class PolicyDomainError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

/// Syntax error in a formula, with 1-based position and the tokens that would
/// have been accepted.
class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column, std::string expected)
        : Error(format(message, line, column, expected)),
          message_(message),
          line_(line),
          column_(column),
          expected_(std::move(expected)) {}

    /// The diagnostic without the position prefix.
    const std::string& message() const noexcept { return message_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    static std::string format(const std::string& message, int line, int column,
                              const std::string& expected) {
        std::string out = "parse error at " + std::to_string(line) + ":" +
                          std::to_string(column) + ": " + message;
        if (!expected.empty()) out += " (expected " + expected + ")";
        return out;
    }

    std::string message_;
    int line_;
    int column_;
    std::string expected_;
};

}  // namespace adasynth
