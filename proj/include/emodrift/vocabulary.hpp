#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "emodrift/corpus.hpp"
#include "emodrift/error.hpp"

namespace emodrift {

using TokenId = std::uint32_t;

// Token frequencies for one slice corpus.
struct SliceFrequencies {
  std::string name;
  std::unordered_map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
};

inline SliceFrequencies count_tokens(std::string name, const std::vector<std::vector<std::string>>& documents) {
  SliceFrequencies f;
  f.name = std::move(name);
  for (const auto& doc : documents) {
    for (const auto& tok : doc) {
      ++f.counts[tok];
      ++f.total;
    }
  }
  return f;
}

// Vocabulary shared by every slice model: a token belongs to it only if it
// reaches min_count in every slice. Ids are dense and ordered by descending
// total count, ties by surface, so they are stable for a given input.
class SharedVocabulary {
 public:
  SharedVocabulary() = default;

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& slice_names() const { return slice_names_; }

  std::optional<TokenId> find(const std::string& surface) const {
    auto it = index_.find(surface);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id(const std::string& surface) const {
    auto found = find(surface);
    if (!found) throw DataError("token '" + surface + "' is not in the shared vocabulary");
    return *found;
  }

  // counts(slice)[id]
  const std::vector<std::uint64_t>& counts(std::size_t slice) const { return counts_.at(slice); }

  std::size_t slice_index(const std::string& name) const {
    auto it = std::find(slice_names_.begin(), slice_names_.end(), name);
    if (it == slice_names_.end()) throw DataError("slice '" + name + "' was not used to build the vocabulary");
    return static_cast<std::size_t>(it - slice_names_.begin());
  }

  static SharedVocabulary from_tokens(std::vector<std::string> tokens) {
    SharedVocabulary v;
    v.tokens_ = std::move(tokens);
    for (TokenId i = 0; i < v.tokens_.size(); ++i) {
      if (!v.index_.emplace(v.tokens_[i], i).second) throw DataError("duplicate token '" + v.tokens_[i] + "'");
    }
    return v;
  }

  friend SharedVocabulary build_vocab(const std::vector<SliceFrequencies>& slices, std::uint64_t min_count);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<std::string> slice_names_;
  std::vector<std::vector<std::uint64_t>> counts_;
};

inline SharedVocabulary build_vocab(const std::vector<SliceFrequencies>& slices, std::uint64_t min_count) {
  if (slices.empty()) throw ConfigError("build_vocab needs at least one slice");
  if (min_count < 1) throw ConfigError("min_count must be >= 1");

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [tok, c0] : slices.front().counts) {
    if (c0 < min_count) continue;
    std::uint64_t total = c0;
    bool everywhere = true;
    for (std::size_t s = 1; s < slices.size() && everywhere; ++s) {
      auto it = slices[s].counts.find(tok);
      if (it == slices[s].counts.end() || it->second < min_count) everywhere = false;
      else total += it->second;
    }
    if (everywhere) kept.emplace_back(tok, total);
  }
  if (kept.empty()) {
    std::vector<std::pair<std::size_t, std::string>> eligible;
    for (const auto& s : slices) {
      const auto n = static_cast<std::size_t>(std::count_if(s.counts.begin(), s.counts.end(),
                                                            [&](const auto& kv) { return kv.second >= min_count; }));
      eligible.emplace_back(n, s.name);
    }
    std::sort(eligible.begin(), eligible.end());
    std::string names;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, eligible.size()); ++i) {
      if (i) names += ", ";
      names += eligible[i].second + " (" + std::to_string(eligible[i].first) + " tokens >= min_count)";
    }
    throw DataError("shared vocabulary is empty; sparsest slices: " + names);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, total] : kept) tokens.push_back(tok);
  SharedVocabulary v = SharedVocabulary::from_tokens(std::move(tokens));
  for (const auto& s : slices) {
    v.slice_names_.push_back(s.name);
    std::vector<std::uint64_t> c(v.size());
    for (TokenId i = 0; i < v.size(); ++i) c[i] = s.counts.at(v.tokens_[i]);
    v.counts_.push_back(std::move(c));
  }
  return v;
}

}  // namespace emodrift
