#pragma once

#include <stdexcept>
#include <string>

namespace maphdr {

// Invalid or inconsistent input data (bad file, failed validation).
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical procedure failed to produce a usable result.
// The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace maphdr
