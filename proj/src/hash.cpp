#include "sbbv/hash.hpp"

#include <fstream>

#include "sbbv/errors.hpp"
#include "sbbv/rng.hpp"

namespace sbbv {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path + " for hashing");
  std::uint64_t h = kFnvOffset;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    if (!in) break;
  }
  return hex64(h);
}

std::string hash_string(std::string_view s) { return hex64(fnv1a64(s)); }

std::uint64_t derive_seed(std::uint64_t root, const std::string& stage) {
  std::uint64_t h = fnv1a64(stage, kFnvOffset ^ root);
  // One splitmix round to decorrelate nearby roots.
  return splitmix64(h);
}

}  // namespace sbbv
