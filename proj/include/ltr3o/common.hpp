#pragma once

#include <stdexcept>
#include <string>

namespace ltr3o {

// Input, configuration, or data problems the caller can fix. CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failures while executing an otherwise valid request. CLI exit code 2.
struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ltr3o
