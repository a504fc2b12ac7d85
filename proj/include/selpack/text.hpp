#pragma once

// Tokenization, hashing and deterministic RNG helpers shared across modules.

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace selpack {

inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
    case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
    case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
    case 0x3000:
      return true;
    default:
      return false;
  }
}

// Decodes one UTF-8 codepoint starting at s[i]; advances i past it.
// Invalid bytes are passed through as single opaque codepoints.
inline char32_t utf8_next(std::string_view s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
  else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
  else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
  else { ++i; return b0; }
  if (i + len > s.size()) { ++i; return b0; }
  for (int j = 1; j < len; ++j) {
    unsigned char bj = static_cast<unsigned char>(s[i + j]);
    if ((bj & 0xC0) != 0x80) { ++i; return b0; }
    cp = (cp << 6) | (bj & 0x3F);
  }
  i += len;
  return cp;
}

// Splits on Unicode whitespace. Tokens keep their original bytes.
inline std::vector<std::string> whitespace_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  std::size_t start = 0;
  bool in_token = false;
  while (i < text.size()) {
    std::size_t at = i;
    char32_t cp = utf8_next(text, i);
    if (is_unicode_space(cp)) {
      if (in_token) {
        tokens.emplace_back(text.substr(start, at - start));
        in_token = false;
      }
    } else if (!in_token) {
      start = at;
      in_token = true;
    }
  }
  if (in_token) tokens.emplace_back(text.substr(start));
  return tokens;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t last_end = 0;
  std::size_t i = 0;
  bool seen = false;
  while (i < s.size()) {
    std::size_t at = i;
    char32_t cp = utf8_next(s, i);
    if (!is_unicode_space(cp)) {
      if (!seen) {
        b = at;
        seen = true;
      }
      last_end = i;
    }
  }
  if (!seen) return {};
  return std::string(s.substr(b, last_end - b));
}

// FNV-1a 64-bit with a seed folded into the offset basis. Stable across platforms.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0) {
  std::uint64_t h = 1469598103934665603ull ^ (seed * 0x9E3779B97F4A7C15ull);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Uniform double in [0, 1) from the top 53 bits of the engine output.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unbiased uniform integer in [0, n) via rejection. n must be > 0.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace selpack
