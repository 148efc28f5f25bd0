#pragma once

#include <iostream>
#include <string>

namespace ebshrink {

// Diagnostics go to stderr; stdout is reserved for results.
inline void log_warning(const std::string& msg) {
  std::cerr << "[ebshrink] warning: " << msg << "\n";
}

}  // namespace ebshrink
