#pragma once

#include <unicode/uchar.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/emoji_data.hpp"
#include "emodrift/error.hpp"
#include "emodrift/tokenizer.hpp"
#include "emodrift/utf8.hpp"

namespace emodrift {

enum class Platform { iOS, Android, Web, Other };

inline constexpr std::array<Platform, 4> kAllPlatforms = {Platform::iOS, Platform::Android, Platform::Web,
                                                          Platform::Other};

inline std::string_view to_string(Platform p) {
  switch (p) {
    case Platform::iOS: return "iOS";
    case Platform::Android: return "Android";
    case Platform::Web: return "Web";
    case Platform::Other: return "Other";
  }
  return "Other";
}

// Case-insensitive; anything unrecognised is Other.
inline Platform parse_platform(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ios") return Platform::iOS;
  if (lower == "android") return Platform::Android;
  if (lower == "web") return Platform::Web;
  return Platform::Other;
}

// Calendar month. Ordered chronologically.
struct YearMonth {
  int year = 1970;
  unsigned month = 1;

  static YearMonth from_unix(std::int64_t seconds) {
    const std::chrono::sys_seconds tp{std::chrono::seconds{seconds}};
    const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(tp)};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
  }

  // "YYYY-MM"
  static YearMonth parse(std::string_view s) {
    int y = 0;
    unsigned m = 0;
    if (s.size() != 7 || s[4] != '-') throw ConfigError("bad month '" + std::string(s) + "', expected YYYY-MM");
    for (std::size_t i = 0; i < 7; ++i) {
      if (i == 4) continue;
      if (s[i] < '0' || s[i] > '9') throw ConfigError("bad month '" + std::string(s) + "', expected YYYY-MM");
      if (i < 4) y = y * 10 + (s[i] - '0');
      else m = m * 10 + static_cast<unsigned>(s[i] - '0');
    }
    if (m < 1 || m > 12) throw ConfigError("bad month '" + std::string(s) + "'");
    return {y, m};
  }

  int ordinal() const { return year * 12 + static_cast<int>(month) - 1; }
  static YearMonth from_ordinal(int ord) { return {ord / 12, static_cast<unsigned>(ord % 12) + 1}; }
  YearMonth plus(int months) const { return from_ordinal(ordinal() + months); }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
    return buf;
  }

  friend auto operator<=>(const YearMonth& a, const YearMonth& b) { return a.ordinal() <=> b.ordinal(); }
  friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

struct SliceKey {
  YearMonth period;
  Platform platform = Platform::Other;

  // File-system friendly name, e.g. "2016-05_iOS".
  std::string name() const { return period.str() + "_" + std::string(to_string(platform)); }

  static SliceKey parse(std::string_view name) {
    const auto us = name.find('_');
    if (us == std::string_view::npos) throw ConfigError("bad slice name '" + std::string(name) + "'");
    const auto platform = name.substr(us + 1);
    if (parse_platform(platform) == Platform::Other && platform != "Other") {
      throw ConfigError("bad platform in slice name '" + std::string(name) + "'");
    }
    return {YearMonth::parse(name.substr(0, us)), parse_platform(platform)};
  }

  friend auto operator<=>(const SliceKey& a, const SliceKey& b) {
    if (auto c = a.period <=> b.period; c != 0) return c;
    return static_cast<int>(a.platform) <=> static_cast<int>(b.platform);
  }
  friend bool operator==(const SliceKey&, const SliceKey&) = default;
};

// T consecutive months times P platforms. Dataset index i runs 1..n with
// platforms varying fastest.
class SliceGrid {
 public:
  SliceGrid(YearMonth first, YearMonth last, std::vector<Platform> platforms)
      : first_(first), last_(last), platforms_(std::move(platforms)) {
    if (last_ < first_) throw ConfigError("grid end " + last_.str() + " precedes start " + first_.str());
    if (platforms_.empty()) throw ConfigError("grid has no platforms");
    std::vector<Platform> sorted = platforms_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("grid lists a platform twice");
    }
  }

  std::size_t periods() const { return static_cast<std::size_t>(last_.ordinal() - first_.ordinal() + 1); }
  std::size_t size() const { return periods() * platforms_.size(); }
  YearMonth first() const { return first_; }
  YearMonth last() const { return last_; }
  const std::vector<Platform>& platforms() const { return platforms_; }

  bool contains(const SliceKey& key) const { return index(key).has_value(); }

  // 1-based dataset index, or nullopt outside the grid.
  std::optional<std::size_t> index(const SliceKey& key) const {
    if (key.period < first_ || last_ < key.period) return std::nullopt;
    const auto it = std::find(platforms_.begin(), platforms_.end(), key.platform);
    if (it == platforms_.end()) return std::nullopt;
    const auto t = static_cast<std::size_t>(key.period.ordinal() - first_.ordinal());
    return t * platforms_.size() + static_cast<std::size_t>(it - platforms_.begin()) + 1;
  }

  SliceKey key(std::size_t index) const {
    if (index < 1 || index > size()) throw ConfigError("slice index out of range");
    const auto i = index - 1;
    return {first_.plus(static_cast<int>(i / platforms_.size())), platforms_[i % platforms_.size()]};
  }

  std::vector<SliceKey> keys() const {
    std::vector<SliceKey> out;
    out.reserve(size());
    for (std::size_t i = 1; i <= size(); ++i) out.push_back(key(i));
    return out;
  }

 private:
  YearMonth first_;
  YearMonth last_;
  std::vector<Platform> platforms_;
};

struct RawPost {
  std::string text;
  std::int64_t timestamp = 0;
  Platform platform = Platform::Other;
  bool is_retweet = false;
  std::optional<std::string> user_id;
};

// One JSON object per line: {text, timestamp, platform, is_retweet, user_id?}.
// Invalid UTF-8 or missing fields raise DataError.
inline RawPost parse_post(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed post: ") + e.what());
  }
  if (!j.is_object()) throw DataError("malformed post: not a JSON object");
  RawPost post;
  try {
    post.text = j.at("text").get<std::string>();
    post.timestamp = j.at("timestamp").get<std::int64_t>();
    post.platform = parse_platform(j.value("platform", std::string("Other")));
    post.is_retweet = j.value("is_retweet", false);
    if (auto it = j.find("user_id"); it != j.end() && !it->is_null()) {
      post.user_id = it->is_string() ? it->get<std::string>() : it->dump();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed post: ") + e.what());
  }
  if (!utf8::is_valid(post.text)) throw DataError("malformed post: text is not valid UTF-8");
  return post;
}

namespace detail {

inline bool is_handle_char(utf8::CodePoint cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
}

inline bool is_word_char(utf8::CodePoint cp) {
  const auto mask = U_GET_GC_MASK(static_cast<UChar32>(cp));
  return (mask & (U_GC_L_MASK | U_GC_M_MASK | U_GC_N_MASK)) != 0;
}

inline bool is_punctuation(utf8::CodePoint cp) {
  return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_P_MASK) != 0;
}

inline bool matches_ascii_ci(std::u32string_view cps, std::size_t pos, std::string_view lit) {
  if (pos + lit.size() > cps.size()) return false;
  for (std::size_t k = 0; k < lit.size(); ++k) {
    auto c = cps[pos + k];
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
    if (c != static_cast<utf8::CodePoint>(lit[k])) return false;
  }
  return true;
}

}  // namespace detail

// Cleaning rules applied to every post:
//  - a leading "RT @user:" retweet marker is removed
//  - URLs ("http://" or "https://" through the next whitespace) are removed
//  - "@handle" mentions are removed
//  - text is lower-cased
//  - each punctuation character (general category P*) becomes its own token
//  - each emoji sequence becomes its own token; ZWJ-joined code points stay
//    together
//  - letters, marks and digits form words; every other character (symbols,
//    controls, stray joiners or selectors) acts as a separator and is dropped
//  - whitespace is collapsed to single spaces and trimmed
inline std::string normalize(std::string_view text, const EmojiProperties& props) {
  const std::u32string cps = utf8::decode(text);
  std::string out;
  std::u32string word;
  const auto emit_word = [&] {
    if (word.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += utf8::encode(word);
    word.clear();
  };
  const auto emit_piece = [&](std::u32string_view piece) {
    emit_word();
    if (!out.empty()) out.push_back(' ');
    out += utf8::encode(piece);
  };

  std::size_t i = 0;
  while (i < cps.size() && is_unicode_space(cps[i])) ++i;
  if (detail::matches_ascii_ci(cps, i, "rt") && i + 2 < cps.size() && is_unicode_space(cps[i + 2])) {
    std::size_t j = i + 2;
    while (j < cps.size() && is_unicode_space(cps[j])) ++j;
    if (j + 1 < cps.size() && cps[j] == '@' && detail::is_handle_char(cps[j + 1])) {
      i = j + 1;
      while (i < cps.size() && detail::is_handle_char(cps[i])) ++i;
      if (i < cps.size() && cps[i] == ':') ++i;
    }
  }

  while (i < cps.size()) {
    const auto cp = cps[i];
    if (detail::matches_ascii_ci(cps, i, "http://") || detail::matches_ascii_ci(cps, i, "https://")) {
      while (i < cps.size() && !is_unicode_space(cps[i])) ++i;
      continue;
    }
    if (cp == '@' && i + 1 < cps.size() && detail::is_handle_char(cps[i + 1]) &&
        (i == 0 || !detail::is_word_char(cps[i - 1]))) {
      ++i;
      while (i < cps.size() && detail::is_handle_char(cps[i])) ++i;
      continue;
    }
    if (is_unicode_space(cp)) {
      emit_word();
      ++i;
      continue;
    }
    if (starts_emoji(props, cps, i)) {
      const auto match = parse_emoji_sequence(props, cps, i);
      if (match.codepoints.size() == 1 && match.codepoints[0] == utf8::kZeroWidthJoiner) {
        emit_word();  // a joiner outside a sequence is a special character
      } else {
        emit_piece(match.codepoints);
      }
      i = match.next;
      continue;
    }
    if (detail::is_punctuation(cp)) {
      emit_piece(std::u32string_view(&cps[i], 1));
      ++i;
      continue;
    }
    if (detail::is_word_char(cp)) {
      word.push_back(static_cast<utf8::CodePoint>(u_tolower(static_cast<UChar32>(cp))));
      ++i;
      continue;
    }
    emit_word();
    ++i;
  }
  emit_word();
  return out;
}

struct AdmitOptions {
  // Keep only posts with at least one emoji token.
  bool require_emoji = true;
  // Written slice text drops skin-tone modifiers from emoji.
  bool collapse_skin_tones = false;
};

inline bool admit(const RawPost& post, const EmojiProperties& props, const AdmitOptions& options = {}) {
  if (post.is_retweet) return false;
  const std::string clean = normalize(post.text, props);
  if (clean.empty()) return false;
  if (!options.require_emoji) return true;
  const auto tokens = tokenize(clean, props);
  return std::any_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.kind == TokenKind::Emoji; });
}

struct CleanDocument {
  std::vector<Token> tokens;
  SliceKey slice;
};

struct SliceCounts {
  std::size_t documents = 0;
  std::size_t tokens = 0;
  std::size_t skipped = 0;  // posts mapped to this slice but refused by admit()
};

struct PartitionResult {
  std::map<SliceKey, SliceCounts> slices;
  std::size_t read = 0;
  std::size_t malformed = 0;
  std::size_t rejected = 0;
  std::size_t admitted = 0;
  std::size_t out_of_grid = 0;
  TokenizerDiagnostics diagnostics;

  nlohmann::json to_json() const {
    nlohmann::json slices_json = nlohmann::json::object();
    for (const auto& [key, c] : slices) {
      slices_json[key.name()] = {{"documents", c.documents}, {"tokens", c.tokens}, {"skipped", c.skipped}};
    }
    return {{"slices", slices_json},
            {"posts_read", read},
            {"malformed", malformed},
            {"rejected", rejected},
            {"admitted", admitted},
            {"out_of_grid", out_of_grid},
            {"tokenizer_diagnostics",
             {{"lone_joiners", diagnostics.lone_joiners},
              {"lone_modifiers", diagnostics.lone_modifiers},
              {"unpaired_regional_indicators", diagnostics.unpaired_regional_indicators}}}};
  }
};

inline std::filesystem::path slice_path(const std::filesystem::path& dir, const SliceKey& key) {
  return dir / (key.name() + ".txt");
}

// Streams newline-delimited JSON posts into one cleaned-text file per slice
// (one document per line) plus manifest.json. Admitted posts whose month or
// platform falls outside the grid are counted in out_of_grid; unparseable
// lines are counted in malformed. Every grid slice gets a file, possibly empty.
inline PartitionResult partition(std::istream& posts, const SliceGrid& grid, const std::filesystem::path& out_dir,
                                 const EmojiProperties& props, const AdmitOptions& options = {}) {
  std::filesystem::create_directories(out_dir);
  PartitionResult result;
  std::map<SliceKey, std::ofstream> files;
  for (const auto& key : grid.keys()) {
    result.slices[key] = {};
    auto& f = files[key];
    f.open(slice_path(out_dir, key), std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + slice_path(out_dir, key).string());
  }
  std::string line;
  while (std::getline(posts, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.read;
    RawPost post;
    try {
      post = parse_post(line);
    } catch (const DataError&) {
      ++result.malformed;
      continue;
    }
    const SliceKey key{YearMonth::from_unix(post.timestamp), post.platform};
    const bool in_grid = grid.contains(key);
    if (!admit(post, props, options)) {
      ++result.rejected;
      if (in_grid) ++result.slices[key].skipped;
      continue;
    }
    ++result.admitted;
    if (!in_grid) {
      ++result.out_of_grid;
      continue;
    }
    const auto clean = normalize(post.text, props);
    const auto tokens = tokenize(clean, props, {options.collapse_skin_tones}, &result.diagnostics);
    auto& counts = result.slices[key];
    ++counts.documents;
    counts.tokens += tokens.size();
    files[key] << (options.collapse_skin_tones ? join_surfaces(tokens) : clean) << '\n';
  }
  for (auto& [key, f] : files) {
    f.flush();
    if (!f) throw DataError("write failed for " + slice_path(out_dir, key).string());
  }
  std::ofstream manifest(out_dir / "manifest.json", std::ios::trunc);
  manifest << result.to_json().dump(2) << '\n';
  return result;
}

// Reads a slice file back as whitespace-separated token surfaces per document.
inline std::vector<std::vector<std::string>> read_slice_documents(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open slice file " + path.string());
  std::vector<std::vector<std::string>> docs;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> doc;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\r' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\r' && line[j] != '\t') ++j;
      if (j > i) doc.emplace_back(line, i, j - i);
      i = j;
    }
    if (!doc.empty()) docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace emodrift
