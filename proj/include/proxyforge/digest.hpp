#pragma once

// Content digests for artifact reproducibility metadata (FNV-1a, 64-bit).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "proxyforge/error.hpp"

namespace proxyforge {

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string digest_hex(std::uint64_t hash) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xf];
    hash >>= 4;
  }
  return "fnv1a64:" + out;
}

inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::bad_file, "cannot open '" + path.string() + "' for digest");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return digest_hex(fnv1a64(content));
}

}  // namespace proxyforge
