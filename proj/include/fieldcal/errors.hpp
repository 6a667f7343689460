#pragma once

#include <stdexcept>
#include <string>

namespace fieldcal {

/// Malformed input: a file, record or argument violates its schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a valid result (degenerate
/// configuration, EM collapse, singular product, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fieldcal
