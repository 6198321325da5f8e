#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/embedding.hpp"
#include "emodrift/error.hpp"

namespace emodrift {

struct AnalogyItem {
  std::string a;
  std::string b;
  std::string c;
  std::string expected;
  std::string category;  // "word" or "emoji"
};

struct ScoredToken {
  std::string token;
  double score = 0;
};

namespace detail {

inline double norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

// Ranks every token by cosine similarity to vec(c) - vec(a) + vec(b), best
// first, ties by row order. With `exclude_inputs` the three query tokens are
// left out of the ranking.
inline std::vector<ScoredToken> analogy(const EmbeddingModel& model, const std::string& a, const std::string& b,
                                        const std::string& c, std::size_t top_k, bool exclude_inputs = true) {
  const auto ia = model.index_of(a);
  const auto ib = model.index_of(b);
  const auto ic = model.index_of(c);
  const std::size_t d = model.dim();
  std::vector<double> query(d);
  for (std::size_t k = 0; k < d; ++k) {
    query[k] = static_cast<double>(model.row(ic)[k]) - model.row(ia)[k] + model.row(ib)[k];
  }
  const double qn = detail::norm(query);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(model.size());
  for (std::size_t r = 0; r < model.size(); ++r) {
    if (exclude_inputs && (r == ia || r == ib || r == ic)) continue;
    double dp = 0;
    double rn = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const double x = model.row(r)[k];
      dp += x * query[k];
      rn += x * x;
    }
    const double denom = std::sqrt(rn) * qn;
    scored.emplace_back(denom > 0 ? dp / denom : 0.0, r);
  }
  const std::size_t k = std::min(top_k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    [](const auto& x, const auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
  std::vector<ScoredToken> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({model.tokens()[scored[i].second], scored[i].first});
  return out;
}

// "a b c expected category" per line, '#' starts a comment.
inline std::vector<AnalogyItem> parse_analogy_suite(std::istream& in) {
  std::vector<AnalogyItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    AnalogyItem item;
    if (!(ss >> item.a)) continue;
    std::string extra;
    if (!(ss >> item.b >> item.c >> item.expected >> item.category) || (ss >> extra)) {
      throw DataError("analogy suite line " + std::to_string(lineno) + ": expected 'a b c expected category'");
    }
    if (item.category != "word" && item.category != "emoji") {
      throw DataError("analogy suite line " + std::to_string(lineno) + ": category must be word or emoji");
    }
    const std::vector<std::string> four{item.a, item.b, item.c, item.expected};
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        if (four[i] == four[j]) {
          throw DataError("analogy suite line " + std::to_string(lineno) + ": tokens must be distinct");
        }
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

inline std::vector<AnalogyItem> load_analogy_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open analogy suite " + path.string());
  return parse_analogy_suite(in);
}

enum class SanityVerdict { Accepted, Rejected, Untested };

inline std::string_view to_string(SanityVerdict v) {
  switch (v) {
    case SanityVerdict::Accepted: return "ACCEPTED";
    case SanityVerdict::Rejected: return "REJECTED";
    case SanityVerdict::Untested: return "UNTESTED";
  }
  return "UNTESTED";
}

struct SuiteReport {
  std::string slice;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  std::size_t hits_at_1 = 0;
  std::size_t hits_at_k = 0;
  std::size_t top_k = 0;
  double gate = 0;
  SanityVerdict verdict = SanityVerdict::Untested;

  double rate_at_1() const { return scored ? static_cast<double>(hits_at_1) / static_cast<double>(scored) : 0.0; }
  double rate_at_k() const { return scored ? static_cast<double>(hits_at_k) / static_cast<double>(scored) : 0.0; }

  nlohmann::json to_json() const {
    return {{"slice", slice},         {"scored", scored},         {"skipped", skipped},
            {"hits_at_1", hits_at_1}, {"hits_at_k", hits_at_k},   {"top_k", top_k},
            {"rate_at_1", rate_at_1()}, {"rate_at_k", rate_at_k()}, {"gate", gate},
            {"verdict", std::string(to_string(verdict))}};
  }
};

// Items with an out-of-vocabulary token are skipped. The model is REJECTED
// when hits@top_k over scored items falls below `gate`, UNTESTED when nothing
// could be scored.
inline SuiteReport run_suite(const EmbeddingModel& model, const std::vector<AnalogyItem>& items, std::size_t top_k,
                             double gate) {
  if (items.empty()) throw DataError("analogy suite is empty");
  if (top_k == 0) throw ConfigError("top_k must be positive");
  SuiteReport report;
  report.slice = model.slice();
  report.top_k = top_k;
  report.gate = gate;
  for (const auto& item : items) {
    if (!model.find(item.a) || !model.find(item.b) || !model.find(item.c) || !model.find(item.expected)) {
      ++report.skipped;
      continue;
    }
    ++report.scored;
    const auto ranked = analogy(model, item.a, item.b, item.c, top_k);
    if (!ranked.empty() && ranked.front().token == item.expected) ++report.hits_at_1;
    if (std::any_of(ranked.begin(), ranked.end(), [&](const ScoredToken& t) { return t.token == item.expected; })) {
      ++report.hits_at_k;
    }
  }
  if (report.scored == 0) report.verdict = SanityVerdict::Untested;
  else report.verdict = report.rate_at_k() < gate ? SanityVerdict::Rejected : SanityVerdict::Accepted;
  return report;
}

}  // namespace emodrift
