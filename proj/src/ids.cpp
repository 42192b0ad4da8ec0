#include "geoanim/ids.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <chrono>
#include <random>
#include <stdexcept>

#include "geoanim/errors.hpp"

namespace geoanim {

namespace {

constexpr char kCrockford[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

std::array<unsigned char, SHA256_DIGEST_LENGTH> sha256_raw(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
  return digest;
}

// 48-bit time field then 80 bits of payload, 5 bits per character.
std::string encode_ulid(std::uint64_t time48, const std::array<unsigned char, 10>& payload) {
  std::string out(26, '0');
  for (int i = 9; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kCrockford[time48 & 31U];
    time48 >>= 5;
  }
  // 80 bits -> 16 chars
  unsigned __int128 bits = 0;
  for (unsigned char b : payload) bits = (bits << 8) | b;
  for (int i = 25; i >= 10; --i) {
    out[static_cast<std::size_t>(i)] = kCrockford[static_cast<unsigned>(bits & 31U)];
    bits >>= 5;
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  static constexpr char hex[] = "0123456789abcdef";
  auto digest = sha256_raw(data);
  std::string out;
  out.reserve(digest.size() * 2);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 15]);
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ParseError("base64 length is not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) throw ParseError("invalid base64 payload");
  // EVP_DecodeBlock keeps the padding bytes as zeros.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string new_ulid() {
  auto now = std::chrono::system_clock::now().time_since_epoch();
  auto ms = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(now).count());
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::array<unsigned char, 10> payload{};
  std::uint64_t a = rng(), b = rng();
  for (int i = 0; i < 8; ++i) payload[static_cast<std::size_t>(i)] = static_cast<unsigned char>(a >> (8 * i));
  payload[8] = static_cast<unsigned char>(b);
  payload[9] = static_cast<unsigned char>(b >> 8);
  return encode_ulid(ms & 0xFFFFFFFFFFFFULL, payload);
}

std::string derived_id(std::string_view seed, std::uint64_t ordinal) {
  auto digest = sha256_raw(seed);
  std::array<unsigned char, 10> payload{};
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = digest[i];
  return encode_ulid(ordinal & 0xFFFFFFFFFFFFULL, payload);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash64(std::string_view text) {
  auto digest = sha256_raw(text);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace geoanim
