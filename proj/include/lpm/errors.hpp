#pragma once

#include <stdexcept>
#include <string>

namespace lpm {

/// Malformed or inconsistent input data (CSV contents, label values, dimension
/// mismatches between files). CLI exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-PD matrix where PD is required, divergent objective,
/// degenerate denominator. CLI exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed serialized stream or config file.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lpm
