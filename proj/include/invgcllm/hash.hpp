#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace invgcllm {

// FNV-1a, pinned so hashes are stable across platforms and runs.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a_hex(std::string_view s);

}  // namespace invgcllm
