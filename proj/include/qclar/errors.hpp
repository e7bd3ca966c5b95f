#pragma once

#include <stdexcept>
#include <string>

namespace qclar {

// Input violates a documented invariant (bad dims, malformed records, bad config).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qclar
