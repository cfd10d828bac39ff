#pragma once

#include <stdexcept>
#include <string>

namespace zfcert {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when the interior-point solver stalls on a problem it cannot classify.
struct NumericalFailure : std::runtime_error {
  NumericalFailure(const std::string& what, double alpha)
      : std::runtime_error(what), alpha(alpha) {}
  double alpha;
};

}  // namespace zfcert
