#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/corpus.hpp"
#include "emodrift/error.hpp"
#include "emodrift/random.hpp"
#include "emodrift/utf8.hpp"

namespace emodrift::synth {

enum class DriftStyle { Abrupt, Gradual, Seasonal };

inline std::string_view to_string(DriftStyle s) {
  switch (s) {
    case DriftStyle::Abrupt: return "Abrupt";
    case DriftStyle::Gradual: return "Gradual";
    case DriftStyle::Seasonal: return "Seasonal";
  }
  return "Abrupt";
}

inline DriftStyle parse_style(std::string_view s) {
  if (s == "Abrupt" || s == "abrupt") return DriftStyle::Abrupt;
  if (s == "Gradual" || s == "gradual") return DriftStyle::Gradual;
  if (s == "Seasonal" || s == "seasonal") return DriftStyle::Seasonal;
  throw ConfigError("unknown drift style '" + std::string(s) + "'");
}

struct DriftSpec {
  std::string token;
  std::size_t topic_before = 0;
  std::size_t topic_after = 0;
  YearMonth change;
  DriftStyle style = DriftStyle::Abrupt;
  int months = 1;  // ramp length for Gradual, period for Seasonal

  // Share of the token's occurrences that come from the after-topic in
  // `period`. Seasonal spends the first half of each cycle (rounded up) in the
  // after-topic.
  double after_weight(const YearMonth& period) const {
    const int dt = period.ordinal() - change.ordinal();
    if (dt < 0) return 0.0;
    switch (style) {
      case DriftStyle::Abrupt: return 1.0;
      case DriftStyle::Gradual: return std::min(1.0, static_cast<double>(dt + 1) / static_cast<double>(months));
      case DriftStyle::Seasonal: return (dt % months) < (months + 1) / 2 ? 1.0 : 0.0;
    }
    return 0.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"token", token},
                     {"topic_before", topic_before},
                     {"topic_after", topic_after},
                     {"change_period", change.str()},
                     {"style", std::string(to_string(style))}};
    if (style == DriftStyle::Gradual) j["ramp_months"] = months;
    if (style == DriftStyle::Seasonal) j["period_months"] = months;
    return j;
  }

  static DriftSpec from_json(const nlohmann::json& j) {
    DriftSpec d;
    d.token = j.at("token").get<std::string>();
    d.topic_before = j.at("topic_before").get<std::size_t>();
    d.topic_after = j.at("topic_after").get<std::size_t>();
    d.change = YearMonth::parse(j.at("change_period").get<std::string>());
    d.style = parse_style(j.at("style").get<std::string>());
    if (j.contains("ramp_months")) d.months = j["ramp_months"].get<int>();
    if (j.contains("period_months")) d.months = j["period_months"].get<int>();
    return d;
  }
};

struct GeneratorConfig {
  std::size_t topics = 20;
  std::size_t words_per_topic = 20;
  std::size_t emoji_per_topic = 5;
  std::vector<double> topic_weights;  // empty = uniform
  // Overlapping-pool mode: each topic also draws the first `overlap` tokens
  // of the next topic.
  std::size_t overlap = 0;
  std::size_t docs_per_slice = 50000;
  std::size_t min_length = 6;
  std::size_t max_length = 10;
  YearMonth first{2016, 5};
  std::size_t slices = 12;
  Platform platform = Platform::iOS;
  std::uint64_t seed = 7;
  std::size_t workers = 1;

  std::size_t vocab_size() const { return topics * (words_per_topic + emoji_per_topic); }

  void validate() const {
    if (topics < 2) throw ConfigError("need at least 2 topics");
    if (words_per_topic + emoji_per_topic == 0) throw ConfigError("topic pools must be non-empty");
    if (topics * emoji_per_topic > 0x1F3FB - 0x1F300) throw ConfigError("too many synthetic emoji");
    if (!topic_weights.empty()) {
      if (topic_weights.size() != topics) throw ConfigError("topic_weights must have one entry per topic");
      for (double w : topic_weights) {
        if (!(w > 0)) throw ConfigError("topic weights must be positive");
      }
    }
    if (overlap >= words_per_topic + emoji_per_topic && overlap > 0) throw ConfigError("overlap too large");
    if (docs_per_slice == 0 || slices == 0) throw ConfigError("document and slice counts must be positive");
    if (min_length == 0 || min_length > max_length) throw ConfigError("invalid document length range");
    if (workers == 0) throw ConfigError("workers must be positive");
  }

  YearMonth period(std::size_t slice) const { return first.plus(static_cast<int>(slice)); }
  std::string slice_name(std::size_t slice) const { return SliceKey{period(slice), platform}.name(); }

  nlohmann::json to_json() const {
    return {{"topics", topics},
            {"words_per_topic", words_per_topic},
            {"emoji_per_topic", emoji_per_topic},
            {"topic_weights", topic_weights},
            {"overlap", overlap},
            {"docs_per_slice", docs_per_slice},
            {"min_length", min_length},
            {"max_length", max_length},
            {"first_period", first.str()},
            {"slices", slices},
            {"platform", std::string(to_string(platform))},
            {"seed", seed}};
  }
};

// Native pools: words "t<topic>w<j>" followed by single-codepoint emoji taken
// in order from U+1F300, which stays clear of the skin-tone modifiers.
inline std::vector<std::vector<std::string>> topic_pools(const GeneratorConfig& cfg) {
  std::vector<std::vector<std::string>> pools(cfg.topics);
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    for (std::size_t j = 0; j < cfg.words_per_topic; ++j) pools[t].push_back("t" + std::to_string(t) + "w" + std::to_string(j));
    for (std::size_t j = 0; j < cfg.emoji_per_topic; ++j) {
      pools[t].push_back(utf8::encode(std::u32string(1, static_cast<utf8::CodePoint>(0x1F300 + t * cfg.emoji_per_topic + j))));
    }
  }
  return pools;
}

// Emoji surface of the j-th emoji of topic t.
inline std::string topic_emoji(const GeneratorConfig& cfg, std::size_t t, std::size_t j) {
  return utf8::encode(std::u32string(1, static_cast<utf8::CodePoint>(0x1F300 + t * cfg.emoji_per_topic + j)));
}

inline void validate_drifts(const GeneratorConfig& cfg, const std::vector<DriftSpec>& drifts) {
  const auto pools = topic_pools(cfg);
  std::set<std::string> seen;
  for (const auto& d : drifts) {
    if (d.topic_before >= cfg.topics || d.topic_after >= cfg.topics) throw ConfigError("drift topic out of range");
    if (d.topic_before == d.topic_after) throw ConfigError("drift topics must differ for '" + d.token + "'");
    const auto in = [&](std::size_t t) {
      return std::find(pools[t].begin(), pools[t].end(), d.token) != pools[t].end();
    };
    if (!in(d.topic_before) && !in(d.topic_after)) {
      throw ConfigError("drift token '" + d.token + "' is in neither named topic");
    }
    const int dt = d.change.ordinal() - cfg.first.ordinal();
    if (dt < 0 || dt >= static_cast<int>(cfg.slices)) throw ConfigError("drift change period outside the grid");
    if (d.style != DriftStyle::Abrupt && d.months < 1) throw ConfigError("ramp/period must be at least 1 month");
    if (!seen.insert(d.token).second) throw ConfigError("token '" + d.token + "' drifts twice");
  }
}

struct WeightedPool {
  std::vector<std::string> tokens;
  std::vector<double> cumulative;

  const std::string& draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), tokens.size() - 1);
    return tokens[idx];
  }
};

// Per-topic sampling pools for one period, with drifting tokens moved between
// their two topics by after_weight.
inline std::vector<WeightedPool> slice_pools(const GeneratorConfig& cfg, const std::vector<DriftSpec>& drifts,
                                             const YearMonth& period) {
  const auto native = topic_pools(cfg);
  std::vector<std::vector<std::pair<std::string, double>>> members(cfg.topics);
  std::map<std::string, const DriftSpec*> drifting;
  for (const auto& d : drifts) drifting[d.token] = &d;
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    const auto& next = native[(t + 1) % cfg.topics];
    std::vector<std::string> all = native[t];
    for (std::size_t j = 0; j < cfg.overlap && j < next.size(); ++j) all.push_back(next[j]);
    for (const auto& tok : all) {
      if (!drifting.count(tok)) members[t].emplace_back(tok, 1.0);
    }
  }
  for (const auto& d : drifts) {
    const double w = d.after_weight(period);
    if (w < 1.0) members[d.topic_before].emplace_back(d.token, 1.0 - w);
    if (w > 0.0) members[d.topic_after].emplace_back(d.token, w);
  }
  std::vector<WeightedPool> pools(cfg.topics);
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    double acc = 0;
    for (const auto& [tok, w] : members[t]) {
      acc += w;
      pools[t].tokens.push_back(tok);
      pools[t].cumulative.push_back(acc);
    }
    if (pools[t].tokens.empty()) throw ConfigError("topic " + std::to_string(t) + " ends up empty");
  }
  return pools;
}

// Documents of one slice, one space-joined line each.
inline std::vector<std::string> generate_slice(const GeneratorConfig& cfg, const std::vector<DriftSpec>& drifts,
                                               std::size_t slice) {
  const auto pools = slice_pools(cfg, drifts, cfg.period(slice));
  std::vector<double> topic_cdf(cfg.topics);
  double acc = 0;
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    acc += cfg.topic_weights.empty() ? 1.0 : cfg.topic_weights[t];
    topic_cdf[t] = acc;
  }
  Rng rng(mix_seed(cfg.seed, slice));
  std::vector<std::string> docs;
  docs.reserve(cfg.docs_per_slice);
  const std::size_t span = cfg.max_length - cfg.min_length + 1;
  for (std::size_t i = 0; i < cfg.docs_per_slice; ++i) {
    const double u = rng.uniform() * acc;
    const auto t = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(topic_cdf.begin(), topic_cdf.end(), u) - topic_cdf.begin()),
        cfg.topics - 1);
    const std::size_t len = cfg.min_length + rng.below(span);
    std::string line;
    for (std::size_t k = 0; k < len; ++k) {
      if (k) line += ' ';
      line += pools[t].draw(rng);
    }
    docs.push_back(std::move(line));
  }
  return docs;
}

struct GroundTruth {
  std::vector<std::string> slices;
  std::vector<DriftSpec> drifts;
  GeneratorConfig config;

  nlohmann::json to_json() const {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& s : drifts) d.push_back(s.to_json());
    return {{"slices", slices}, {"drifts", d}, {"config", config.to_json()}};
  }

  static GroundTruth from_json(const nlohmann::json& j) {
    GroundTruth g;
    g.slices = j.at("slices").get<std::vector<std::string>>();
    for (const auto& d : j.at("drifts")) g.drifts.push_back(DriftSpec::from_json(d));
    return g;
  }
};

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground truth " + path.string());
  try {
    return GroundTruth::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed ground truth " + path.string() + ": " + e.what());
  }
}

// Writes <name>.txt per slice, manifest.json with per-slice counts (the
// ingest layout) and truth.json with the planted drifts.
inline GroundTruth generate(const GeneratorConfig& cfg, const std::vector<DriftSpec>& drifts,
                            const std::filesystem::path& out_dir) {
  cfg.validate();
  validate_drifts(cfg, drifts);
  std::filesystem::create_directories(out_dir);
  GroundTruth truth;
  truth.drifts = drifts;
  truth.config = cfg;
  for (std::size_t s = 0; s < cfg.slices; ++s) truth.slices.push_back(cfg.slice_name(s));

  std::vector<SliceCounts> counts(cfg.slices);
  const auto write_slice = [&](std::size_t s) {
    const auto docs = generate_slice(cfg, drifts, s);
    std::ofstream f(out_dir / (truth.slices[s] + ".txt"), std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write slice " + truth.slices[s]);
    for (const auto& d : docs) {
      f << d << '\n';
      counts[s].tokens += static_cast<std::size_t>(std::count(d.begin(), d.end(), ' ')) + 1;
    }
    counts[s].documents = docs.size();
    if (!f.flush()) throw DataError("write failed for slice " + truth.slices[s]);
  };
  const std::size_t workers = std::min(cfg.workers, cfg.slices);
  if (workers <= 1) {
    for (std::size_t s = 0; s < cfg.slices; ++s) write_slice(s);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s = w; s < cfg.slices; s += workers) write_slice(s);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  nlohmann::json slices = nlohmann::json::object();
  for (std::size_t s = 0; s < cfg.slices; ++s) {
    slices[truth.slices[s]] = {{"documents", counts[s].documents}, {"tokens", counts[s].tokens}, {"skipped", 0}};
  }
  std::ofstream(out_dir / "manifest.json", std::ios::trunc) << nlohmann::json{{"slices", slices}}.dump(2) << '\n';
  std::ofstream(out_dir / "truth.json", std::ios::trunc) << truth.to_json().dump(2) << '\n';
  return truth;
}

// Spreads `count` Abrupt drifts over distinct topics: the first emoji of topic
// 2i moves to topic 2i+1.
inline std::vector<DriftSpec> default_drifts(const GeneratorConfig& cfg, std::size_t count, const YearMonth& change,
                                             DriftStyle style = DriftStyle::Abrupt, int months = 1) {
  if (cfg.emoji_per_topic == 0) throw ConfigError("default drifts need emoji in the pools");
  if (2 * count > cfg.topics) throw ConfigError("not enough topics for the requested drifts");
  std::vector<DriftSpec> out;
  for (std::size_t i = 0; i < count; ++i) {
    DriftSpec d;
    d.token = topic_emoji(cfg, 2 * i, 0);
    d.topic_before = 2 * i;
    d.topic_after = 2 * i + 1;
    d.change = change;
    d.style = style;
    d.months = months;
    out.push_back(d);
  }
  return out;
}

// One detector comparison reduced to what scoring needs.
struct ComparisonReport {
  std::string from_slice;
  std::string to_slice;
  std::vector<std::string> drifted;
};

struct Score {
  double precision = 0;
  double recall = 0;
  std::map<std::string, double> recall_by_style;
  std::vector<std::string> recovered;
  std::vector<std::string> false_positives;
  std::size_t reported = 0;
  std::size_t planted = 0;

  nlohmann::json to_json() const {
    return {{"precision", precision},     {"recall", recall},
            {"recall_by_style", recall_by_style}, {"recovered", recovered},
            {"false_positives", false_positives}, {"reported", reported},
            {"planted", planted}};
  }
};

inline YearMonth slice_period(const std::string& name) { return YearMonth::parse(std::string_view(name).substr(0, 7)); }

inline bool spans(const DriftSpec& d, const ComparisonReport& r) {
  const int a = slice_period(r.from_slice).ordinal();
  const int b = slice_period(r.to_slice).ordinal();
  const int c = d.change.ordinal();
  return std::min(a, b) < c && c <= std::max(a, b);
}

// Recall: planted tokens reported by some comparison that spans their change
// period. Precision: share of distinct reported tokens that are recovered
// planted tokens; 0 when nothing is reported.
inline Score score(const std::vector<ComparisonReport>& reports, const GroundTruth& truth) {
  const std::set<std::string> grid(truth.slices.begin(), truth.slices.end());
  for (const auto& r : reports) {
    if (!grid.count(r.from_slice) || !grid.count(r.to_slice)) {
      throw DataError("report " + r.from_slice + " -> " + r.to_slice + " does not belong to the benchmark grid");
    }
  }
  Score s;
  s.planted = truth.drifts.size();
  std::set<std::string> recovered;
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_style;
  for (const auto& d : truth.drifts) {
    auto& [hit, total] = by_style[std::string(to_string(d.style))];
    ++total;
    for (const auto& r : reports) {
      if (spans(d, r) && std::find(r.drifted.begin(), r.drifted.end(), d.token) != r.drifted.end()) {
        recovered.insert(d.token);
        ++hit;
        break;
      }
    }
  }
  std::set<std::string> reported;
  for (const auto& r : reports) reported.insert(r.drifted.begin(), r.drifted.end());
  s.reported = reported.size();
  for (const auto& t : reported) {
    if (!recovered.count(t)) s.false_positives.push_back(t);
  }
  s.recovered.assign(recovered.begin(), recovered.end());
  s.recall = s.planted ? static_cast<double>(recovered.size()) / static_cast<double>(s.planted) : 0.0;
  s.precision = reported.empty() ? 0.0 : static_cast<double>(recovered.size()) / static_cast<double>(reported.size());
  for (const auto& [style, ht] : by_style) {
    s.recall_by_style[style] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
  }
  return s;
}

}  // namespace emodrift::synth
