#pragma once

#include <stdexcept>
#include <string>

namespace pdeseries {

// Caller mistakes: mismatched dimensions, out-of-range indices, bad arguments.
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

// The requested truncation order exceeds what the stored data can support.
class InsufficientOrderError : public UsageError {
public:
    explicit InsufficientOrderError(const std::string& msg) : UsageError(msg) {}
};

// An operation that only makes sense for compatible systems was asked to run
// on one whose compatibility check failed; carries a short witness string.
class NotIntegrableError : public std::runtime_error {
public:
    NotIntegrableError(const std::string& msg, std::string witness)
        : std::runtime_error(msg), witness_text(std::move(witness)) {}
    std::string witness_text;
};

// Expression syntax failure. `position` is a 0-based character offset into
// the offending input string.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"),
          position(pos) {}
    std::size_t position;
};

}  // namespace pdeseries
