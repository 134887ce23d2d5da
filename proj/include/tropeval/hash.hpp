#pragma once

#include <cstdint>
#include <string>

namespace tropeval {

// Hex-encoded SHA-256 of the input bytes (OpenSSL-backed).
std::string sha256_hex(const std::string& data);

// First 8 bytes of SHA-256 as a big-endian u64; used for order-independent
// seeded decisions keyed by request fingerprint.
uint64_t sha256_prefix_u64(const std::string& data);

}  // namespace tropeval
