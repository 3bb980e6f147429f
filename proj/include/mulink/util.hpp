#pragma once

#include <cstdint>
#include <string>

namespace mulink {

// SHA-256 of a byte string, lowercase hex; used to fingerprint configs in
// the run manifest.
std::string sha256_hex(const std::string& data);

std::string read_file(const std::string& path);

}  // namespace mulink
