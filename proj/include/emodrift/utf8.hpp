#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "emodrift/error.hpp"

namespace emodrift::utf8 {

using CodePoint = char32_t;

inline constexpr CodePoint kZeroWidthJoiner = 0x200D;
inline constexpr CodePoint kVariationSelect16 = 0xFE0F;
inline constexpr CodePoint kVariationSelect15 = 0xFE0E;
inline constexpr CodePoint kKeycapCombiner = 0x20E3;
inline constexpr CodePoint kCancelTag = 0xE007F;

// Strict decoder: rejects overlong forms, surrogates, values above U+10FFFF
// and truncated sequences. Throws DataError with the byte offset.
inline std::u32string decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  const auto fail = [&](const char* what) {
    throw DataError("invalid UTF-8 at byte " + std::to_string(i) + ": " + what);
  };
  while (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    int len = 0;
    CodePoint cp = 0;
    CodePoint min = 0;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2; cp = b0 & 0x1F; min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3; cp = b0 & 0x0F; min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4; cp = b0 & 0x07; min = 0x10000;
    } else {
      fail("bad lead byte");
    }
    if (i + len > bytes.size()) fail("truncated sequence");
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80) fail("bad continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min) fail("overlong encoding");
    if (cp > 0x10FFFF) fail("code point above U+10FFFF");
    if (cp >= 0xD800 && cp <= 0xDFFF) fail("surrogate code point");
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline bool is_valid(std::string_view bytes) {
  try {
    decode(bytes);
    return true;
  } catch (const DataError&) {
    return false;
  }
}

inline void append(std::string& out, CodePoint cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size() * 2);
  for (CodePoint cp : cps) append(out, cp);
  return out;
}

}  // namespace emodrift::utf8
