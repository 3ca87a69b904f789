#pragma once

#include <cstdint>

namespace agora {

// Logical time. Everything that wants a timestamp shares one of these.
struct Clock {
  std::uint64_t tick = 0;
  std::uint64_t now() const { return tick; }
  std::uint64_t advance() { return ++tick; }
};

}  // namespace agora
