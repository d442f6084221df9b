#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ccnmig {

using Bytes = std::vector<uint8_t>;

inline Bytes to_bytes(const std::string& s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

std::string hex_encode(const Bytes& b);
Bytes hex_decode(const std::string& hex);

}  // namespace ccnmig
