#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace despeckle {

/// Precondition or parameter violation.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed image or graph file. `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Well-formed file of a kind this toolkit does not handle (e.g. colour PFM).
class UnsupportedFormat : public FormatError {
public:
    using FormatError::FormatError;
};

/// Input for which the requested quantity is undefined (zero image, zero kernel moment).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite or inadmissible values produced during an evolution.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, long iteration)
        : std::runtime_error(what), iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

}  // namespace despeckle
