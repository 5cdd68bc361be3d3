#ifndef DSR_ERROR_HPP
#define DSR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dsr {

// Shapes or operators that do not belong together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or unreadable input data (files, manifests, empty frames).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or a failed decomposition.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dsr

#endif  // DSR_ERROR_HPP
