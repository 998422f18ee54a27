#pragma once

#include <stdexcept>
#include <string>

namespace retas {

/// Malformed or inconsistent input data (catalog files, reports, configs).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite or degenerate intermediate.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace retas
