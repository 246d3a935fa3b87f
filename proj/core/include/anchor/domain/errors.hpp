#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anchor {

// Root of every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or missing credentials. Aborts a run.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A call contract was violated by the caller (e.g. batch = 0, empty index).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A numeric argument is outside the domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
};

// An enumeration would exceed its size guard.
class SizeError : public Error {
public:
    using Error::Error;
};

// Network or provider failure. Retryable.
class TransportError : public Error {
public:
    using Error::Error;
};

// No payload matching the expected schema was found in a model response.
class ParseError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t actual)
        : Error("embedding dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(actual)),
          expected_(expected),
          actual_(actual) {}

    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

// Reduction or clustering backend failure.
class BackendError : public Error {
public:
    using Error::Error;
};

// A replay mock was asked for a request it has no fixture for. Never degraded
// into a fallback: golden runs must fail loudly.
class FixtureMissing : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace anchor
