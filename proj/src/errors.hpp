#ifndef GPI_ERRORS_HPP_
#define GPI_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gpi {

// Invalid user-facing configuration (unknown env name, bad hyperparameters,
// mismatched dimensions at API boundaries).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside an algorithm (non-finite ratio, CG divergence,
// dual bracket failure).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gpi

#endif  // GPI_ERRORS_HPP_
