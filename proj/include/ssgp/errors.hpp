#pragma once

#include <stdexcept>
#include <string>

namespace ssgp {

// Bad shapes, out-of-domain arguments, violated preconditions.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Factorization failures, non-finite moments, unstable simulator steps.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration and pipeline input problems (schema, missing or stale files).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Emits a warning line on stderr unless warnings are silenced.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace ssgp
