#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "kgr/errors.hpp"

namespace kgr {

// 64-bit FNV-1a, used for vocabulary fingerprints and manifest file hashes.
class Fnv1a {
 public:
  void update(std::string_view s) {
    for (unsigned char c : s) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }

  void update_byte(unsigned char c) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.digest();
}

inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  Fnv1a h;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  }
  return h.digest();
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace kgr
