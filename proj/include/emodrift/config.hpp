#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/corpus.hpp"
#include "emodrift/drift.hpp"
#include "emodrift/embedding.hpp"
#include "emodrift/error.hpp"
#include "emodrift/synthetic.hpp"
#include "emodrift/timeseries.hpp"

namespace emodrift {

inline constexpr std::string_view kVersion = "0.1.0";

// Every tunable of a run. Populated from defaults, then a key=value file, then
// command-line overrides; validated once before any stage runs.
struct RunConfig {
  std::string workdir = "emodrift-work";
  std::string input = "-";
  std::string analogy_suite;  // empty = bundled suite

  std::string grid_first = "2016-05";
  std::string grid_last = "2019-04";
  std::string platforms = "iOS,Android,Web";
  bool require_emoji = true;
  bool collapse_skin_tones = false;

  Hyperparameters hp;
  std::uint64_t min_count = 5;
  std::size_t slice_workers = 1;

  double beta = 2.0;
  bool unsafe_beta = false;
  std::string distance = "cosine";
  std::string statistic_scope = "upper";
  std::size_t normality_max_n = 5000;
  std::size_t max_pairs = 0;  // 0 = every flagged pair in the JSON report
  bool csv = false;

  std::size_t top_k = 10;
  double gate = 0.3;

  std::size_t k = 10;
  double epsilon = 0.05;
  double slope_threshold = 0.01;
  double r2_floor = 0.5;

  synth::GeneratorConfig synth;
  std::size_t synth_drifts = 5;
  std::size_t synth_change_index = 6;
  std::string synth_style = "Abrupt";
  int synth_months = 12;

  using Setter = std::function<void(RunConfig&, const std::string&)>;
  using Getter = std::function<nlohmann::json(const RunConfig&)>;
  struct Field {
    std::string key;
    Setter set;
    Getter get;
  };

  static const std::vector<Field>& fields();

  void set(const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
      if (f.key == key) {
        f.set(*this, value);
        return;
      }
    }
    throw ConfigError("unknown config key '" + key + "'");
  }

  // "key = value" lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      const auto key_end = line.find('=');
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
      };
      if (trim(line).empty()) continue;
      if (key_end == std::string::npos) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
      }
      set(trim(line.substr(0, key_end)), trim(line.substr(key_end + 1)));
    }
  }

  SliceGrid grid() const {
    std::vector<Platform> ps;
    std::size_t start = 0;
    while (start <= platforms.size()) {
      const auto comma = platforms.find(',', start);
      const auto item = platforms.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) ps.push_back(parse_platform(item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return SliceGrid(YearMonth::parse(grid_first), YearMonth::parse(grid_last), ps);
  }

  DistanceKind distance_kind() const {
    if (distance == "cosine") return DistanceKind::Cosine;
    if (distance == "similarity") return DistanceKind::Similarity;
    throw ConfigError("distance must be cosine or similarity");
  }

  StatisticScope scope() const {
    if (statistic_scope == "upper") return StatisticScope::UpperTriangle;
    if (statistic_scope == "full") return StatisticScope::FullMatrix;
    throw ConfigError("statistic_scope must be upper or full");
  }

  DetectorOptions detector() const {
    DetectorOptions o;
    o.beta = beta;
    o.allow_unsafe_beta = unsafe_beta;
    o.distance = distance_kind();
    o.scope = scope();
    o.normality_max_n = normality_max_n;
    o.seed = hp.seed;
    o.workers = hp.workers;
    return o;
  }

  PatternThresholds thresholds() const { return {epsilon, slope_threshold, r2_floor}; }

  std::filesystem::path slices_dir() const { return std::filesystem::path(workdir) / "slices"; }
  std::filesystem::path models_dir() const { return std::filesystem::path(workdir) / "models"; }
  std::filesystem::path reports_dir() const { return std::filesystem::path(workdir) / "reports"; }

  void validate() const {
    hp.validate();
    (void)grid();
    (void)distance_kind();
    (void)scope();
    check_beta(beta, unsafe_beta);
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (slice_workers == 0) throw ConfigError("slice_workers must be positive");
    if (top_k == 0) throw ConfigError("top_k must be positive");
    if (gate < 0.0 || gate > 1.0) throw ConfigError("gate must lie in [0, 1]");
    if (k == 0) throw ConfigError("k must be positive");
    if (normality_max_n < 3) throw ConfigError("normality_max_n must be at least 3");
    if (epsilon < 0 || slope_threshold < 0 || r2_floor < 0 || r2_floor > 1) {
      throw ConfigError("pattern thresholds out of range");
    }
    synth.validate();
    (void)synth::parse_style(synth_style);
    if (synth_change_index == 0 || synth_change_index >= synth.slices) {
      throw ConfigError("synth_change_index must fall strictly inside the slice range");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : fields()) j[f.key] = f.get(*this);
    return j;
  }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

template <typename M>
RunConfig::Field number_field(std::string key, M member) {
  using T = std::remove_cvref_t<decltype(std::declval<RunConfig&>().*member)>;
  return {key, [key, member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) { return nlohmann::json(c.*member); }};
}

template <typename Get>
RunConfig::Field custom_field(std::string key, std::function<void(RunConfig&, const std::string&)> set, Get get) {
  return {std::move(key), std::move(set), [get](const RunConfig& c) { return nlohmann::json(get(c)); }};
}

}  // namespace detail

inline const std::vector<RunConfig::Field>& RunConfig::fields() {
  using detail::custom_field;
  using detail::number_field;
  using detail::parse_bool;
  using detail::parse_number;
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    const auto str = [](std::string key, std::string RunConfig::*m) {
      return Field{key, [m](RunConfig& c, const std::string& v) { c.*m = v; },
                   [m](const RunConfig& c) { return nlohmann::json(c.*m); }};
    };
    const auto flag = [](std::string key, bool RunConfig::*m) {
      return Field{key, [key, m](RunConfig& c, const std::string& v) { c.*m = parse_bool(key, v); },
                   [m](const RunConfig& c) { return nlohmann::json(c.*m); }};
    };
    t.push_back(str("workdir", &RunConfig::workdir));
    t.push_back(str("input", &RunConfig::input));
    t.push_back(str("analogy_suite", &RunConfig::analogy_suite));
    t.push_back(str("grid_first", &RunConfig::grid_first));
    t.push_back(str("grid_last", &RunConfig::grid_last));
    t.push_back(str("platforms", &RunConfig::platforms));
    t.push_back(flag("require_emoji", &RunConfig::require_emoji));
    t.push_back(flag("collapse_skin_tones", &RunConfig::collapse_skin_tones));

    t.push_back(custom_field("dim", [](RunConfig& c, const std::string& v) { c.hp.dim = parse_number<std::size_t>("dim", v); },
                             [](const RunConfig& c) { return c.hp.dim; }));
    t.push_back(custom_field("window", [](RunConfig& c, const std::string& v) { c.hp.window = parse_number<std::size_t>("window", v); },
                             [](const RunConfig& c) { return c.hp.window; }));
    t.push_back(custom_field("negatives",
                             [](RunConfig& c, const std::string& v) { c.hp.negatives = parse_number<std::size_t>("negatives", v); },
                             [](const RunConfig& c) { return c.hp.negatives; }));
    t.push_back(custom_field("epochs", [](RunConfig& c, const std::string& v) { c.hp.epochs = parse_number<std::size_t>("epochs", v); },
                             [](const RunConfig& c) { return c.hp.epochs; }));
    t.push_back(custom_field("learning_rate",
                             [](RunConfig& c, const std::string& v) { c.hp.learning_rate = parse_number<double>("learning_rate", v); },
                             [](const RunConfig& c) { return c.hp.learning_rate; }));
    t.push_back(custom_field("subsample",
                             [](RunConfig& c, const std::string& v) { c.hp.subsample = parse_number<double>("subsample", v); },
                             [](const RunConfig& c) { return c.hp.subsample; }));
    t.push_back(custom_field("seed", [](RunConfig& c, const std::string& v) { c.hp.seed = parse_number<std::uint64_t>("seed", v); },
                             [](const RunConfig& c) { return c.hp.seed; }));
    t.push_back(custom_field("workers", [](RunConfig& c, const std::string& v) { c.hp.workers = parse_number<std::size_t>("workers", v); },
                             [](const RunConfig& c) { return c.hp.workers; }));
    t.push_back(custom_field("oov_occupies_window",
                             [](RunConfig& c, const std::string& v) { c.hp.oov_occupies_window = parse_bool("oov_occupies_window", v); },
                             [](const RunConfig& c) { return c.hp.oov_occupies_window; }));
    t.push_back(number_field("min_count", &RunConfig::min_count));
    t.push_back(number_field("slice_workers", &RunConfig::slice_workers));

    t.push_back(number_field("beta", &RunConfig::beta));
    t.push_back(flag("unsafe_beta", &RunConfig::unsafe_beta));
    t.push_back(str("distance", &RunConfig::distance));
    t.push_back(str("statistic_scope", &RunConfig::statistic_scope));
    t.push_back(number_field("normality_max_n", &RunConfig::normality_max_n));
    t.push_back(number_field("max_pairs", &RunConfig::max_pairs));
    t.push_back(flag("csv", &RunConfig::csv));

    t.push_back(number_field("top_k", &RunConfig::top_k));
    t.push_back(number_field("gate", &RunConfig::gate));

    t.push_back(number_field("k", &RunConfig::k));
    t.push_back(number_field("epsilon", &RunConfig::epsilon));
    t.push_back(number_field("slope_threshold", &RunConfig::slope_threshold));
    t.push_back(number_field("r2_floor", &RunConfig::r2_floor));

    t.push_back(custom_field("synth_topics",
                             [](RunConfig& c, const std::string& v) { c.synth.topics = parse_number<std::size_t>("synth_topics", v); },
                             [](const RunConfig& c) { return c.synth.topics; }));
    t.push_back(custom_field("synth_words_per_topic",
                             [](RunConfig& c, const std::string& v) {
                               c.synth.words_per_topic = parse_number<std::size_t>("synth_words_per_topic", v);
                             },
                             [](const RunConfig& c) { return c.synth.words_per_topic; }));
    t.push_back(custom_field("synth_emoji_per_topic",
                             [](RunConfig& c, const std::string& v) {
                               c.synth.emoji_per_topic = parse_number<std::size_t>("synth_emoji_per_topic", v);
                             },
                             [](const RunConfig& c) { return c.synth.emoji_per_topic; }));
    t.push_back(custom_field("synth_overlap",
                             [](RunConfig& c, const std::string& v) { c.synth.overlap = parse_number<std::size_t>("synth_overlap", v); },
                             [](const RunConfig& c) { return c.synth.overlap; }));
    t.push_back(custom_field("synth_docs",
                             [](RunConfig& c, const std::string& v) {
                               c.synth.docs_per_slice = parse_number<std::size_t>("synth_docs", v);
                             },
                             [](const RunConfig& c) { return c.synth.docs_per_slice; }));
    t.push_back(custom_field("synth_min_length",
                             [](RunConfig& c, const std::string& v) { c.synth.min_length = parse_number<std::size_t>("synth_min_length", v); },
                             [](const RunConfig& c) { return c.synth.min_length; }));
    t.push_back(custom_field("synth_max_length",
                             [](RunConfig& c, const std::string& v) { c.synth.max_length = parse_number<std::size_t>("synth_max_length", v); },
                             [](const RunConfig& c) { return c.synth.max_length; }));
    t.push_back(custom_field("synth_first",
                             [](RunConfig& c, const std::string& v) { c.synth.first = YearMonth::parse(v); },
                             [](const RunConfig& c) { return c.synth.first.str(); }));
    t.push_back(custom_field("synth_slices",
                             [](RunConfig& c, const std::string& v) { c.synth.slices = parse_number<std::size_t>("synth_slices", v); },
                             [](const RunConfig& c) { return c.synth.slices; }));
    t.push_back(custom_field("synth_seed",
                             [](RunConfig& c, const std::string& v) { c.synth.seed = parse_number<std::uint64_t>("synth_seed", v); },
                             [](const RunConfig& c) { return c.synth.seed; }));
    t.push_back(number_field("synth_drifts", &RunConfig::synth_drifts));
    t.push_back(number_field("synth_change_index", &RunConfig::synth_change_index));
    t.push_back(str("synth_style", &RunConfig::synth_style));
    t.push_back(number_field("synth_months", &RunConfig::synth_months));
    return t;
  }();
  return table;
}

// Defaults, then the config file, then EMODRIFT_WORKDIR, then explicit
// overrides in the order given.
inline RunConfig resolve_config(const std::string& config_file,
                                const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig c;
  if (!config_file.empty()) c.load_file(config_file);
  if (const char* env = std::getenv("EMODRIFT_WORKDIR"); env != nullptr && *env != '\0') c.workdir = env;
  for (const auto& [k, v] : overrides) c.set(k, v);
  c.validate();
  return c;
}

}  // namespace emodrift
