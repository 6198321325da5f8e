#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/analogy.hpp"
#include "emodrift/config.hpp"
#include "emodrift/corpus.hpp"
#include "emodrift/drift.hpp"
#include "emodrift/embedding.hpp"
#include "emodrift/emoji_data.hpp"
#include "emodrift/pipeline.hpp"
#include "emodrift/synthetic.hpp"
#include "emodrift/timeseries.hpp"

namespace emodrift {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitSanity = 3;

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::filesystem::path report_path;
};

inline nlohmann::json with_provenance(const RunConfig& cfg, std::string_view command, nlohmann::json body) {
  nlohmann::json j{{"command", command}, {"version", kVersion}, {"config", cfg.to_json()}};
  for (auto& [k, v] : body.items()) j[k] = std::move(v);
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::filesystem::path model_path(const RunConfig& cfg, const std::string& slice) {
  return cfg.models_dir() / (slice + ".vec");
}

// ---- ingest -------------------------------------------------------------

inline CommandResult cmd_ingest(const RunConfig& cfg, std::istream* stdin_stream = nullptr) {
  const auto props = EmojiProperties::standard();
  AdmitOptions opt;
  opt.require_emoji = cfg.require_emoji;
  opt.collapse_skin_tones = cfg.collapse_skin_tones;
  PartitionResult res;
  if (cfg.input == "-") {
    res = partition(stdin_stream ? *stdin_stream : std::cin, cfg.grid(), cfg.slices_dir(), props, opt);
  } else {
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw DataError("cannot open input " + cfg.input);
    res = partition(in, cfg.grid(), cfg.slices_dir(), props, opt);
  }
  CommandResult r;
  r.report = with_provenance(cfg, "ingest", res.to_json());
  r.report_path = cfg.reports_dir() / "ingest.json";
  write_json(r.report_path, r.report);
  return r;
}

// ---- train --------------------------------------------------------------

inline CommandResult cmd_train(const RunConfig& cfg) {
  const auto names = list_slices(cfg.slices_dir());
  auto trained = train_slices(cfg.slices_dir(), names, cfg.min_count, cfg.hp, cfg.slice_workers);
  std::filesystem::create_directories(cfg.models_dir());
  nlohmann::json slices = nlohmann::json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    save_model(trained.models[i], model_path(cfg, names[i]));
    slices.push_back({{"slice", names[i]}, {"model", model_path(cfg, names[i]).filename().string()},
                      {"training", trained.stats[i].to_json()}});
  }
  write_json(cfg.models_dir() / "index.json", {{"slices", names}, {"vocabulary_size", trained.vocab.size()}});
  CommandResult r;
  r.report = with_provenance(cfg, "train", {{"vocabulary_size", trained.vocab.size()}, {"slices", slices}});
  r.report_path = cfg.reports_dir() / "train.json";
  write_json(r.report_path, r.report);
  return r;
}

inline std::vector<std::string> trained_slices(const RunConfig& cfg) {
  const auto index = cfg.models_dir() / "index.json";
  std::ifstream in(index);
  if (!in) throw DataError("no trained models in " + cfg.models_dir().string() + " (run train first)");
  try {
    return nlohmann::json::parse(in).at("slices").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed model index: " + std::string(e.what()));
  }
}

inline EmbeddingModel load_slice_model(const RunConfig& cfg, const std::string& slice) {
  auto m = load_model(model_path(cfg, slice));
  m.set_slice(slice);
  return m;
}

// ---- sanity -------------------------------------------------------------

inline std::filesystem::path suite_path(const RunConfig& cfg) {
  return cfg.analogy_suite.empty() ? EmojiProperties::data_dir() / "analogies.txt" : std::filesystem::path(cfg.analogy_suite);
}

inline std::map<std::string, SuiteReport> sanity_reports(const RunConfig& cfg, const std::vector<std::string>& names) {
  const auto items = load_analogy_suite(suite_path(cfg));
  std::map<std::string, SuiteReport> out;
  for (const auto& n : names) out[n] = run_suite(load_slice_model(cfg, n), items, cfg.top_k, cfg.gate);
  return out;
}

inline CommandResult cmd_sanity(const RunConfig& cfg) {
  const auto names = trained_slices(cfg);
  const auto reports = sanity_reports(cfg, names);
  nlohmann::json models = nlohmann::json::array();
  bool rejected = false;
  for (const auto& n : names) {
    models.push_back(reports.at(n).to_json());
    rejected = rejected || reports.at(n).verdict == SanityVerdict::Rejected;
  }
  CommandResult r;
  r.exit_code = rejected ? kExitSanity : kExitOk;
  r.report = with_provenance(cfg, "sanity", {{"suite", suite_path(cfg).string()}, {"models", models},
                                             {"any_rejected", rejected}});
  r.report_path = cfg.reports_dir() / "sanity.json";
  write_json(r.report_path, r.report);
  return r;
}

// ---- drift --------------------------------------------------------------

struct DriftRequest {
  std::string from;
  std::string to;
  bool sweep = false;
};

// Consecutive-month pairs on the same platform; names that do not parse as
// slice keys are paired in listed order.
inline std::vector<std::pair<std::string, std::string>> adjacent_pairs(const std::vector<std::string>& names) {
  std::vector<std::pair<std::string, std::string>> out;
  std::map<std::string, SliceKey> keys;
  bool all_keys = true;
  for (const auto& n : names) {
    try {
      keys.emplace(n, SliceKey::parse(n));
    } catch (const ConfigError&) {
      all_keys = false;
    }
  }
  if (!all_keys) {
    for (std::size_t i = 0; i + 1 < names.size(); ++i) out.emplace_back(names[i], names[i + 1]);
    return out;
  }
  for (const auto& a : names) {
    for (const auto& b : names) {
      const auto& ka = keys.at(a);
      const auto& kb = keys.at(b);
      if (ka.platform == kb.platform && kb.period.ordinal() == ka.period.ordinal() + 1) out.emplace_back(a, b);
    }
  }
  return out;
}

inline std::string drift_report_name(const std::string& from, const std::string& to) { return from + "__" + to; }

inline DriftResult run_drift(const RunConfig& cfg, const std::string& from, const std::string& to,
                             nlohmann::json* report_out = nullptr) {
  const auto a = load_slice_model(cfg, from);
  const auto b = load_slice_model(cfg, to);
  auto res = detect_drift(a, b, cfg.detector());
  const auto base = cfg.reports_dir() / "drift" / drift_report_name(from, to);
  auto j = with_provenance(cfg, "drift", res.to_json(cfg.max_pairs));
  write_json(base.string() + ".json", j);
  if (cfg.csv) {
    std::ofstream csv(base.string() + ".pairs.csv", std::ios::binary | std::ios::trunc);
    write_flagged_pairs_csv(res, csv);
  }
  if (report_out) *report_out = std::move(j);
  return res;
}

inline CommandResult cmd_drift(const RunConfig& cfg, const DriftRequest& req) {
  const auto names = trained_slices(cfg);
  const auto known = [&](const std::string& s) { return std::find(names.begin(), names.end(), s) != names.end(); };
  CommandResult r;
  if (!req.sweep) {
    if (req.from.empty() || req.to.empty()) throw ConfigError("drift needs --from and --to, or --sweep");
    if (!known(req.from)) throw DataError("no model for slice " + req.from);
    if (!known(req.to)) throw DataError("no model for slice " + req.to);
    run_drift(cfg, req.from, req.to, &r.report);
    r.report_path = cfg.reports_dir() / "drift" / (drift_report_name(req.from, req.to) + ".json");
    return r;
  }
  nlohmann::json comparisons = nlohmann::json::array();
  for (const auto& [a, b] : adjacent_pairs(names)) {
    const auto res = run_drift(cfg, a, b);
    comparisons.push_back({{"from_slice", a},
                           {"to_slice", b},
                           {"flagged_pair_count", res.flagged.size()},
                           {"drifted_tokens", res.drifted_surfaces()},
                           {"report", drift_report_name(a, b) + ".json"}});
  }
  r.report = with_provenance(cfg, "drift", {{"sweep", comparisons}});
  r.report_path = cfg.reports_dir() / "drift" / "sweep.json";
  write_json(r.report_path, r.report);
  return r;
}

// ---- timeseries -----------------------------------------------------------

struct TimeseriesRequest {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> tokens;
  bool gate_models = false;  // rejected models become gaps
};

inline CommandResult cmd_timeseries(const RunConfig& cfg, const TimeseriesRequest& req) {
  if (req.pairs.empty() && req.tokens.empty()) throw ConfigError("timeseries needs at least one --pair or --token");
  const auto names = trained_slices(cfg);
  std::vector<EmbeddingModel> models;
  for (const auto& n : names) models.push_back(load_slice_model(cfg, n));
  std::map<std::string, SuiteReport> verdicts;
  if (req.gate_models) verdicts = sanity_reports(cfg, names);
  std::vector<SeriesInput> inputs;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const bool accepted = !req.gate_models || verdicts.at(names[i]).verdict != SanityVerdict::Rejected;
    inputs.push_back({&models[i], accepted});
  }

  nlohmann::json pairs = nlohmann::json::array();
  std::size_t csv_index = 0;
  for (const auto& [a, b] : req.pairs) {
    const auto series = similarity_series(inputs, a, b);
    nlohmann::json entry{{"series", to_json(series)}};
    const auto observed = series.observed();
    entry["trend"] = nullptr;
    entry["pattern"] = nullptr;
    if (observed.size() >= 2) {
      const auto fit = linear_trend(observed);
      entry["trend"] = to_json(fit);
      if (observed.size() >= 4) entry["pattern"] = std::string(to_string(classify_pattern(series, fit, cfg.thresholds())));
    }
    if (cfg.csv) {
      const auto path = cfg.reports_dir() / "timeseries" / ("series_" + std::to_string(csv_index++) + ".csv");
      std::filesystem::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      write_series_csv(series, out);
      entry["csv"] = path.filename().string();
    }
    pairs.push_back(std::move(entry));
  }

  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : req.tokens) {
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (!inputs[i].accepted) {
        per.push_back({{"slice", names[i]}, {"gap", true}});
        continue;
      }
      auto c = to_json(cohesiveness(models[i], t, cfg.k));
      c["slice"] = names[i];
      c["neighbor_overlap_with_first"] = neighbor_overlap(models.front(), models[i], t, cfg.k);
      per.push_back(std::move(c));
    }
    tokens.push_back({{"token", t}, {"slices", per}});
  }
  CommandResult r;
  r.report = with_provenance(cfg, "timeseries", {{"pairs", pairs}, {"tokens", tokens}});
  r.report_path = cfg.reports_dir() / "timeseries.json";
  write_json(r.report_path, r.report);
  return r;
}

// ---- synth ----------------------------------------------------------------

inline std::vector<synth::DriftSpec> synth_drifts(const RunConfig& cfg) {
  return synth::default_drifts(cfg.synth, cfg.synth_drifts, cfg.synth.period(cfg.synth_change_index),
                               synth::parse_style(cfg.synth_style), cfg.synth_months);
}

// Generates the benchmark into the workdir, trains every slice, runs the
// adjacent sweep and scores it: once over the comparisons that span a planted
// change, once over the whole sweep.
inline CommandResult cmd_synth(const RunConfig& cfg) {
  const auto drifts = synth_drifts(cfg);
  auto synth_cfg = cfg.synth;
  synth_cfg.workers = cfg.slice_workers;
  for (const auto& name : std::filesystem::exists(cfg.slices_dir()) ? list_slices(cfg.slices_dir())
                                                                     : std::vector<std::string>{}) {
    std::filesystem::remove(cfg.slices_dir() / (name + ".txt"));
  }
  const auto truth = synth::generate(synth_cfg, drifts, cfg.slices_dir());
  (void)cmd_train(cfg);
  DriftRequest sweep_req;
  sweep_req.sweep = true;
  const auto sweep = cmd_drift(cfg, sweep_req);

  std::vector<synth::ComparisonReport> all;
  std::vector<synth::ComparisonReport> spanning;
  for (const auto& c : sweep.report.at("sweep")) {
    synth::ComparisonReport cr{c.at("from_slice").get<std::string>(), c.at("to_slice").get<std::string>(),
                               c.at("drifted_tokens").get<std::vector<std::string>>()};
    const bool spans_any =
        std::any_of(drifts.begin(), drifts.end(), [&](const auto& d) { return synth::spans(d, cr); });
    if (spans_any) spanning.push_back(cr);
    all.push_back(std::move(cr));
  }
  const auto spanning_score = synth::score(spanning, truth);
  const auto sweep_score = synth::score(all, truth);
  nlohmann::json spanning_names = nlohmann::json::array();
  for (const auto& s : spanning) spanning_names.push_back(s.from_slice + " -> " + s.to_slice);

  CommandResult r;
  r.report = with_provenance(cfg, "synth",
                             {{"ground_truth", truth.to_json()},
                              {"spanning_comparisons", spanning_names},
                              {"precision", spanning_score.precision},
                              {"recall", spanning_score.recall},
                              {"score_spanning", spanning_score.to_json()},
                              {"score_sweep", sweep_score.to_json()}});
  r.report_path = cfg.reports_dir() / "synth.json";
  write_json(r.report_path, r.report);
  return r;
}

}  // namespace emodrift
