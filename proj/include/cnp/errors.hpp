#pragma once

#include <stdexcept>
#include <string>

namespace cnp {

/// File or stream failure (unreadable input, malformed image, write error).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values that survived the internal retry logic.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cnp
