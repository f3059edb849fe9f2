#pragma once

#include <stdexcept>
#include <string>

namespace enclosure {

/// Invalid input: malformed medium, config, or file.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the admissible domain of an operation (tau too small,
/// position outside [0, M], ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed (singular system, step-size underflow, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fitting or geometry inversion could not produce a trustworthy answer.
class ExtractionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace enclosure
