#pragma once

#include <stdexcept>
#include <string>

namespace medspec {

// Error categories map onto the CLI exit codes: config 1, data 2, numeric 3.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model file could not be read back (truncated, wrong version, bad shapes).
class ModelFormatError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace medspec
