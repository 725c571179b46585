#pragma once

#include <string>
#include <string_view>

namespace skillforge {

/// Hex-encoded SHA-256 digest of the given bytes.
std::string sha256_hex(std::string_view data);

}  // namespace skillforge
