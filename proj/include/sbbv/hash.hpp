#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace sbbv {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v);

// Content hash of a file, as 16 hex digits. Throws MissingArtifact if the
// file cannot be read.
std::string hash_file(const std::string& path);

std::string hash_string(std::string_view s);

}  // namespace sbbv
