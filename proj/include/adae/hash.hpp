#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace adae {

// 64-bit FNV-1a. Content fingerprint for provenance headers, not a security
// primitive.
std::uint64_t fnv1a64(std::string_view bytes);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

inline std::string content_hash(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

}  // namespace adae
