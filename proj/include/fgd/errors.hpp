#pragma once

#include <stdexcept>
#include <string>

namespace fgd {

// Bad input data or configuration: missing files, malformed records.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values escaping a numeric kernel.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fgd
