#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taxoeval {

// Base of every error raised by the library. The CLI maps BackendError and its
// subclasses to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    // 1-based; 0 when the error has no line position (structured documents).
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

// Input that parses but violates a structural invariant (cycles, self-loops).
class StructuralError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class TransportError : public BackendError {
public:
    explicit TransportError(const std::string& what, bool retryable = true)
        : BackendError(what), retryable_(retryable) {}

    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

// The remote side rejected the configuration, e.g. an unknown model id.
class BackendConfigError : public BackendError {
public:
    using BackendError::BackendError;
};

}  // namespace taxoeval
