#include "agora/rng.hpp"

#include "agora/crypto.hpp"

namespace agora {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

Bytes Rng::next_bytes(std::size_t n) {
  Bytes out;
  out.reserve(n);
  while (out.size() < n) {
    std::uint64_t v = next_u64();
    for (int i = 0; i < 8 && out.size() < n; ++i)
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return out;
}

Rng Rng::split(std::string_view label) {
  Encoder enc;
  enc.u64(seed_);
  enc.u64(split_count_++);
  enc.str(label);
  crypto::Digest d = crypto::digest(enc.out);
  std::uint64_t child = 0;
  for (int i = 0; i < 8; ++i) child |= static_cast<std::uint64_t>(d.bytes[i]) << (8 * i);
  return Rng(child);
}

}  // namespace agora
