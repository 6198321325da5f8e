#pragma once

#include <unicode/uchar.h>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "emodrift/emoji_data.hpp"
#include "emodrift/error.hpp"
#include "emodrift/utf8.hpp"

namespace emodrift {

enum class TokenKind { Word, Emoji };

struct Token {
  TokenKind kind = TokenKind::Word;
  std::string surface;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenizerOptions {
  // Drop skin-tone modifiers so modified emoji share their base's entry.
  bool collapse_skin_tones = false;
};

// Malformed emoji material seen while tokenizing. Never fatal.
struct TokenizerDiagnostics {
  std::size_t lone_joiners = 0;
  std::size_t lone_modifiers = 0;
  std::size_t unpaired_regional_indicators = 0;

  std::size_t total() const { return lone_joiners + lone_modifiers + unpaired_regional_indicators; }

  TokenizerDiagnostics& operator+=(const TokenizerDiagnostics& o) {
    lone_joiners += o.lone_joiners;
    lone_modifiers += o.lone_modifiers;
    unpaired_regional_indicators += o.unpaired_regional_indicators;
    return *this;
  }
};

struct EmojiMatch {
  std::u32string codepoints;
  std::size_t next = 0;
  bool degenerate = false;
};

inline bool is_unicode_space(utf8::CodePoint cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0; }

namespace detail {

inline bool is_presentation_selector(utf8::CodePoint cp) {
  return cp == utf8::kVariationSelect16 || cp == utf8::kVariationSelect15;
}

inline bool is_keycap_at(std::u32string_view cps, std::size_t pos) {
  if (pos >= cps.size() || !EmojiProperties::is_keycap_base(cps[pos])) return false;
  std::size_t p = pos + 1;
  if (p < cps.size() && cps[p] == utf8::kVariationSelect16) ++p;
  return p < cps.size() && cps[p] == utf8::kKeycapCombiner;
}

// One element of a ZWJ sequence: keycap, or BASE (VS)? (modifier)? (tag+ cancel)?
inline std::size_t parse_element(const EmojiProperties& props, std::u32string_view cps, std::size_t pos) {
  if (is_keycap_at(cps, pos)) {
    std::size_t p = pos + 1;
    if (cps[p] == utf8::kVariationSelect16) ++p;
    return p + 1;
  }
  std::size_t p = pos + 1;
  if (p < cps.size() && is_presentation_selector(cps[p])) ++p;
  if (p < cps.size() && props.is_modifier(cps[p])) ++p;
  std::size_t t = p;
  while (t < cps.size() && EmojiProperties::is_tag(cps[t])) ++t;
  if (t > p && t < cps.size() && cps[t] == utf8::kCancelTag) p = t + 1;
  return p;
}

inline bool can_follow_joiner(const EmojiProperties& props, utf8::CodePoint cp) {
  return props.is_base(cp) && !props.is_modifier(cp) && !EmojiProperties::is_regional_indicator(cp);
}

}  // namespace detail

// True when the code point at `pos` opens an emoji token (well-formed or
// degenerate).
inline bool starts_emoji(const EmojiProperties& props, std::u32string_view cps, std::size_t pos) {
  if (pos >= cps.size()) return false;
  const auto cp = cps[pos];
  return cp == utf8::kZeroWidthJoiner || props.is_base(cp) || detail::is_keycap_at(cps, pos);
}

// Greedy longest match of
//   FLAG := RI RI
//   SEQ  := ELEM (ZWJ ELEM)*
//   ELEM := BASE (VS16)? (skin-tone)? (tag+ cancel-tag)? | keycap-base (VS16)? U+20E3
// Lone joiners, lone modifiers and unpaired regional indicators come back as
// single-code-point degenerate matches and are tallied in `diag`.
inline EmojiMatch parse_emoji_sequence(const EmojiProperties& props, std::u32string_view cps, std::size_t pos,
                                       TokenizerDiagnostics* diag = nullptr) {
  if (!starts_emoji(props, cps, pos)) {
    throw Error("parse_emoji_sequence: no emoji starts at index " + std::to_string(pos));
  }
  const auto cp = cps[pos];
  const auto degenerate = [&](std::size_t TokenizerDiagnostics::*counter) {
    if (diag != nullptr) ++(diag->*counter);
    return EmojiMatch{std::u32string(1, cp), pos + 1, true};
  };
  if (cp == utf8::kZeroWidthJoiner) return degenerate(&TokenizerDiagnostics::lone_joiners);
  if (EmojiProperties::is_regional_indicator(cp)) {
    if (pos + 1 < cps.size() && EmojiProperties::is_regional_indicator(cps[pos + 1])) {
      return EmojiMatch{std::u32string(cps.substr(pos, 2)), pos + 2, false};
    }
    return degenerate(&TokenizerDiagnostics::unpaired_regional_indicators);
  }
  if (props.is_modifier(cp)) return degenerate(&TokenizerDiagnostics::lone_modifiers);

  std::size_t p = detail::parse_element(props, cps, pos);
  while (p + 1 < cps.size() && cps[p] == utf8::kZeroWidthJoiner && detail::can_follow_joiner(props, cps[p + 1])) {
    p = detail::parse_element(props, cps, p + 1);
  }
  return EmojiMatch{std::u32string(cps.substr(pos, p - pos)), p, false};
}

inline std::u32string strip_skin_tones(const EmojiProperties& props, std::u32string_view seq) {
  std::u32string out;
  out.reserve(seq.size());
  for (auto cp : seq) {
    if (!props.is_modifier(cp)) out.push_back(cp);
  }
  return out;
}

// Splits text into Word and Emoji tokens. Whitespace separates tokens and
// every maximal emoji sequence is its own token, so "a😀b" yields three.
inline std::vector<Token> tokenize(std::u32string_view cps, const EmojiProperties& props,
                                   const TokenizerOptions& options = {}, TokenizerDiagnostics* diag = nullptr) {
  std::vector<Token> tokens;
  std::u32string word;
  const auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back({TokenKind::Word, utf8::encode(word)});
      word.clear();
    }
  };
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_unicode_space(cps[i])) {
      flush();
      ++i;
    } else if (starts_emoji(props, cps, i)) {
      flush();
      auto match = parse_emoji_sequence(props, cps, i, diag);
      if (options.collapse_skin_tones && !match.degenerate) {
        match.codepoints = strip_skin_tones(props, match.codepoints);
      }
      tokens.push_back({TokenKind::Emoji, utf8::encode(match.codepoints)});
      i = match.next;
    } else {
      word.push_back(cps[i]);
      ++i;
    }
  }
  flush();
  return tokens;
}

inline std::vector<Token> tokenize(std::string_view text, const EmojiProperties& props,
                                   const TokenizerOptions& options = {}, TokenizerDiagnostics* diag = nullptr) {
  return tokenize(utf8::decode(text), props, options, diag);
}

inline std::string join_surfaces(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.surface;
  }
  return out;
}

}  // namespace emodrift
