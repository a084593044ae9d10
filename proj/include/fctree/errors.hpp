#pragma once

#include <stdexcept>
#include <string>

namespace fctree {

// Error families; the CLI maps each family to a distinct exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unit-typing violation inside an expression. Messages name the offending
// subexpression.
struct UnitError : DataError {
    using DataError::DataError;
};

// Malformed text input: expression strings, model files, matrix files.
struct ParseError : DataError {
    using DataError::DataError;
};

} // namespace fctree
