#pragma once

#include <stdexcept>
#include <string>

namespace ivskew {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid inputs, parameters out of range, preconditions violated.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Numerical failures: unstable marches, failed factorizations, lost brackets.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// File and format problems: missing files, malformed CSV/JSON.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

}  // namespace ivskew
