#pragma once

#include <stdexcept>
#include <string>

namespace ordlab {

/// Bad input: malformed data, invalid configuration, mismatched shapes.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Filesystem failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ordlab
