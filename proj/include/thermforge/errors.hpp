#pragma once

#include <stdexcept>
#include <string>

namespace thermforge {

// Bad function arguments or violated type invariants.
class InvariantError : public std::invalid_argument {
public:
    explicit InvariantError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed file content; carries the byte offset where parsing failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// File system failures (open/read/write).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input outside the mathematical domain of an operation.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace thermforge
