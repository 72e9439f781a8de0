#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softdyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration value violates its type invariant. `field()` is a dotted path
/// such as `oscillator.zeta1`.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The integrator produced a non-finite state.
class IntegrationDiverged : public Error {
public:
    explicit IntegrationDiverged(double time)
        : Error("integration diverged at t=" + std::to_string(time) + " s"), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Malformed input line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that breaks a schema rule (e.g. time going backwards).
class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class BoundaryGapError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class LengthError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConditioningError : public Error {
public:
    using Error::Error;
};

class UndefinedVarianceError : public Error {
public:
    using Error::Error;
};

class InsufficientRandomnessError : public Error {
public:
    using Error::Error;
};

}  // namespace softdyn
