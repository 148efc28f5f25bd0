#pragma once

#include <string>

namespace ebshrink {

std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace ebshrink
