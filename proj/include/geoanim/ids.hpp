#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace geoanim {

std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// 26-character Crockford base32 id: 48-bit millisecond timestamp followed by
/// 80 random bits, so ids sort by creation time.
std::string new_ulid();

/// ULID-shaped id with the ordinal in the time field and randomness taken
/// from a hash of the seed. Same inputs, same id; sorts by ordinal.
std::string derived_id(std::string_view seed, std::uint64_t ordinal);

/// splitmix64 finalizer; the counter-based generator behind seeded motion.
std::uint64_t mix64(std::uint64_t x);

/// First 8 bytes of sha256(text) as an integer.
std::uint64_t hash64(std::string_view text);

}  // namespace geoanim
