#pragma once

#include <stdexcept>
#include <string>

namespace phasecast {

/// Bad input data or parameters (CLI exit code 1).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; message carries the line number.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, std::size_t line)
        : ValidationError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Request exceeds an enumeration limit (CLI exit code 2).
class RefusalError : public std::runtime_error {
public:
    explicit RefusalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem failure (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace phasecast
