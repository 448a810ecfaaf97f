#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace actforge {

// FNV-1a, 64-bit: offset basis 14695981039346656037, prime 1099511628211.
inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = kFnvOffsetBasis) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// 16 lowercase hex digits of fnv1a64 over the file contents.
std::string file_content_hash(const std::string& path);

std::string hex64(std::uint64_t v);

}  // namespace actforge
