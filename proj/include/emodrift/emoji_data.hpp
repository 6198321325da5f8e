#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "emodrift/error.hpp"
#include "emodrift/utf8.hpp"

#ifndef EMODRIFT_DATA_DIR
#define EMODRIFT_DATA_DIR "data"
#endif

namespace emodrift {

enum class EmojiProperty : std::uint8_t {
  Emoji = 1 << 0,
  EmojiPresentation = 1 << 1,
  EmojiModifier = 1 << 2,
  EmojiModifierBase = 1 << 3,
  EmojiComponent = 1 << 4,
  ExtendedPictographic = 1 << 5,
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline utf8::CodePoint parse_hex(std::string_view s, std::string_view context) {
  s = trim(s);
  std::uint32_t v = 0;
  if (s.empty() || s.size() > 6) throw DataError("bad code point '" + std::string(s) + "' in " + std::string(context));
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint32_t>(c - '0');
    else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint32_t>(c - 'A' + 10);
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint32_t>(c - 'a' + 10);
    else throw DataError("bad code point '" + std::string(s) + "' in " + std::string(context));
  }
  if (v > 0x10FFFF) throw DataError("code point out of range in " + std::string(context));
  return v;
}

inline std::optional<EmojiProperty> property_from_name(std::string_view name) {
  if (name == "Emoji") return EmojiProperty::Emoji;
  if (name == "Emoji_Presentation") return EmojiProperty::EmojiPresentation;
  if (name == "Emoji_Modifier") return EmojiProperty::EmojiModifier;
  if (name == "Emoji_Modifier_Base") return EmojiProperty::EmojiModifierBase;
  if (name == "Emoji_Component") return EmojiProperty::EmojiComponent;
  if (name == "Extended_Pictographic") return EmojiProperty::ExtendedPictographic;
  return std::nullopt;
}

}  // namespace detail

// Emoji character properties ingested from a UTS #51 emoji-data.txt file.
// Lookups are a binary search over merged, disjoint ranges.
class EmojiProperties {
 public:
  struct Range {
    utf8::CodePoint first;
    utf8::CodePoint last;
    std::uint8_t mask;
  };

  static EmojiProperties parse(std::istream& in, std::string_view source = "emoji-data") {
    std::map<utf8::CodePoint, std::uint8_t> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view body = line;
      if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
      body = detail::trim(body);
      if (body.empty()) continue;
      const auto semi = body.find(';');
      const std::string where = std::string(source) + ":" + std::to_string(lineno);
      if (semi == std::string_view::npos) throw DataError("missing ';' at " + where);
      const auto cps = detail::trim(body.substr(0, semi));
      const auto prop = detail::property_from_name(detail::trim(body.substr(semi + 1)));
      if (!prop) continue;  // properties we do not use
      utf8::CodePoint first = 0;
      utf8::CodePoint last = 0;
      if (auto dots = cps.find(".."); dots != std::string_view::npos) {
        first = detail::parse_hex(cps.substr(0, dots), where);
        last = detail::parse_hex(cps.substr(dots + 2), where);
      } else {
        first = last = detail::parse_hex(cps, where);
      }
      if (last < first) throw DataError("inverted range at " + where);
      for (utf8::CodePoint cp = first; cp <= last; ++cp) points[cp] |= static_cast<std::uint8_t>(*prop);
    }
    EmojiProperties props;
    for (const auto& [cp, mask] : points) {
      if (!props.ranges_.empty() && props.ranges_.back().last + 1 == cp && props.ranges_.back().mask == mask) {
        props.ranges_.back().last = cp;
      } else {
        props.ranges_.push_back({cp, cp, mask});
      }
    }
    if (props.ranges_.empty()) throw DataError("no emoji properties found in " + std::string(source));
    return props;
  }

  static EmojiProperties load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open emoji data file " + path.string());
    return parse(in, path.string());
  }

  // Shared instance read from $EMODRIFT_DATA_DIR/unicode/emoji-data.txt, or the
  // data directory the library was configured with.
  static const EmojiProperties& standard() {
    static const EmojiProperties instance = load(data_dir() / "unicode" / "emoji-data.txt");
    return instance;
  }

  static std::filesystem::path data_dir() {
    if (const char* env = std::getenv("EMODRIFT_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return EMODRIFT_DATA_DIR;
  }

  std::uint8_t mask(utf8::CodePoint cp) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), cp,
                               [](utf8::CodePoint c, const Range& r) { return c < r.first; });
    if (it == ranges_.begin()) return 0;
    --it;
    return cp <= it->last ? it->mask : 0;
  }

  bool has(utf8::CodePoint cp, EmojiProperty p) const {
    return (mask(cp) & static_cast<std::uint8_t>(p)) != 0;
  }

  // Code point that can start an emoji token on its own.
  bool is_base(utf8::CodePoint cp) const {
    const auto m = mask(cp);
    return (m & (static_cast<std::uint8_t>(EmojiProperty::ExtendedPictographic) |
                 static_cast<std::uint8_t>(EmojiProperty::EmojiPresentation))) != 0;
  }

  bool is_modifier(utf8::CodePoint cp) const { return has(cp, EmojiProperty::EmojiModifier); }

  static bool is_regional_indicator(utf8::CodePoint cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }
  static bool is_tag(utf8::CodePoint cp) { return cp >= 0xE0020 && cp <= 0xE007E; }
  static bool is_keycap_base(utf8::CodePoint cp) {
    return cp == '#' || cp == '*' || (cp >= '0' && cp <= '9');
  }

  std::size_t range_count() const { return ranges_.size(); }

 private:
  std::vector<Range> ranges_;
};

// Reads the first field of a semicolon-delimited Unicode sequence file
// (emoji-sequences.txt, emoji-zwj-sequences.txt or emoji-test.txt). For
// emoji-test.txt only lines whose status matches `status_filter` are kept;
// an empty filter keeps every line.
inline std::vector<std::u32string> load_emoji_sequences(const std::filesystem::path& path,
                                                        std::string_view status_filter = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sequence file " + path.string());
  std::vector<std::u32string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = detail::trim(body);
    if (body.empty()) continue;
    const auto semi = body.find(';');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (semi == std::string_view::npos) throw DataError("missing ';' at " + where);
    if (!status_filter.empty()) {
      auto rest = body.substr(semi + 1);
      if (auto semi2 = rest.find(';'); semi2 != std::string_view::npos) rest = rest.substr(0, semi2);
      if (detail::trim(rest) != status_filter) continue;
    }
    const auto field = detail::trim(body.substr(0, semi));
    if (field.find("..") != std::string_view::npos) {
      const auto dots = field.find("..");
      const auto first = detail::parse_hex(field.substr(0, dots), where);
      const auto last = detail::parse_hex(field.substr(dots + 2), where);
      for (auto cp = first; cp <= last; ++cp) out.push_back(std::u32string(1, cp));
      continue;
    }
    std::u32string seq;
    std::istringstream ss{std::string(field)};
    std::string hex;
    while (ss >> hex) seq.push_back(detail::parse_hex(hex, where));
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace emodrift
