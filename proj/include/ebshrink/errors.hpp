#pragma once

#include <stdexcept>
#include <string>

namespace ebshrink {

// Violated precondition or invalid model input. CLI maps this to exit code 1.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable/unwritable files and malformed streams. CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ebshrink
