#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace agora {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(const Bytes& b);

std::string hex_encode(const std::uint8_t* data, std::size_t n);
std::string hex_encode(const Bytes& b);
bool hex_decode(std::string_view hex, Bytes& out);

bool contains(const Bytes& haystack, const Bytes& needle);

// Fixed-order binary encoder. Everything that gets hashed or signed goes
// through one of these so the byte layout is pinned in exactly one place.
struct Encoder {
  Bytes out;

  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);  // little-endian
  void raw(const std::uint8_t* p, std::size_t n);
  void raw(const Bytes& b) { raw(b.data(), b.size()); }
  void str(std::string_view s);    // u64 length prefix + bytes
  void blob(const Bytes& b);       // u64 length prefix + bytes
};

// Shortest round-trip decimal form of a double; the canonical text
// representation used by dataset serialization and VM assembly.
std::string format_double(double v);
bool parse_double(std::string_view s, double& out);

}  // namespace agora
