#pragma once

#include <stdexcept>
#include <string>

namespace adcofe {

// Error categories map onto CLI exit codes: usage 1, data 2, numeric 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed payload from an external service (bad JSON, missing fields).
struct ProtocolError : DataError {
  using DataError::DataError;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace adcofe
