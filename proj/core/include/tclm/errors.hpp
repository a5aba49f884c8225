#pragma once

#include <stdexcept>
#include <string>

namespace tclm {

/// Raised when an argument lies outside the mathematical domain of an
/// operation (negative cell counts, non-finite rates, z < -1/e, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Bisection for the spread threshold could not bracket a class change.
class ThresholdNotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The fitting objective has no includable measurement.
class DegenerateCostError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (patients JSON, measurement CSV, reports).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tclm
