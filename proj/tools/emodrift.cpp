// emodrift: command-line driver for ingest, train, sanity, drift, timeseries
// and synth. Exit codes: 0 ok, 1 usage/config, 2 data, 3 sanity gate.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "emodrift/commands.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Binds a flag to a config key; the flag value is applied after the config
// file so it takes precedence.
void bind_key(CLI::App* app, Overrides& ov, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(flag, [&ov, key](const std::string& v) { ov.emplace_back(key, v); }, help);
}

void bind_switch(CLI::App* app, Overrides& ov, const std::string& flag, const std::string& key, const std::string& value,
                 const std::string& help) {
  app->add_flag_callback(flag, [&ov, key, value] { ov.emplace_back(key, value); }, help);
}

std::pair<std::string, std::string> split_pair(const std::string& s, char sep) {
  const auto at = s.find(sep);
  if (at == std::string::npos || at == 0 || at + 1 == s.size()) {
    throw emodrift::ConfigError("expected 'x" + std::string(1, sep) + "y', got '" + s + "'");
  }
  return {s.substr(0, at), s.substr(at + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic drift of words and emoji across time-sliced corpora"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(emodrift::kVersion));

  std::string config_file;
  Overrides ov;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_file, "key=value config file");
  app.add_option("-s,--set", sets, "override any config key (key=value), repeatable");
  bind_key(&app, ov, "--workdir", "workdir", "working directory (slices/, models/, reports/)");
  bind_key(&app, ov, "--seed", "seed", "seed for every random choice");
  bind_key(&app, ov, "--workers", "workers", "threads inside one training run or detector");

  auto* ingest = app.add_subcommand("ingest", "partition newline-delimited JSON posts into slice files");
  bind_key(ingest, ov, "-i,--input", "input", "input file, '-' for stdin");
  bind_key(ingest, ov, "--first", "grid_first", "first month YYYY-MM");
  bind_key(ingest, ov, "--last", "grid_last", "last month YYYY-MM");
  bind_key(ingest, ov, "--platforms", "platforms", "comma-separated platforms");
  bind_switch(ingest, ov, "--all-posts", "require_emoji", "false", "keep posts without emoji");
  bind_switch(ingest, ov, "--collapse-skin-tones", "collapse_skin_tones", "true", "fold skin-tone variants");

  auto* train = app.add_subcommand("train", "build the shared vocabulary and one skip-gram model per slice");
  bind_key(train, ov, "--dim", "dim", "vector dimension");
  bind_key(train, ov, "--window", "window", "context window");
  bind_key(train, ov, "--negatives", "negatives", "negative samples per pair");
  bind_key(train, ov, "--epochs", "epochs", "passes over each slice");
  bind_key(train, ov, "--lr", "learning_rate", "initial learning rate");
  bind_key(train, ov, "--subsample", "subsample", "frequent-token subsampling threshold (0 = off)");
  bind_key(train, ov, "--min-count", "min_count", "minimum count in every slice");
  bind_key(train, ov, "--slice-workers", "slice_workers", "slices trained concurrently");

  auto* sanity = app.add_subcommand("sanity", "score every model on the analogy suite");
  bind_key(sanity, ov, "--suite", "analogy_suite", "suite file");
  bind_key(sanity, ov, "--top-k", "top_k", "hits@k cut-off");
  bind_key(sanity, ov, "--gate", "gate", "minimum hits@k rate");

  emodrift::DriftRequest drift_req;
  auto* drift = app.add_subcommand("drift", "pairwise drift between two slices or every adjacent month");
  drift->add_option("--from", drift_req.from, "earlier slice name");
  drift->add_option("--to", drift_req.to, "later slice name");
  drift->add_flag("--sweep", drift_req.sweep, "compare every pair of adjacent months");
  bind_key(drift, ov, "--beta", "beta", "threshold in standard deviations (>= 2)");
  bind_switch(drift, ov, "--unsafe-beta", "unsafe_beta", "true", "allow beta < 2, marks the report non-conforming");
  bind_key(drift, ov, "--distance", "distance", "cosine or similarity");
  bind_key(drift, ov, "--scope", "statistic_scope", "upper or full");
  bind_key(drift, ov, "--max-pairs", "max_pairs", "flagged pairs listed in the JSON (0 = all)");
  bind_switch(drift, ov, "--csv", "csv", "true", "also write flagged pairs as CSV");

  std::vector<std::string> pair_args;
  emodrift::TimeseriesRequest ts_req;
  auto* ts = app.add_subcommand("timeseries", "similarity series, trends, patterns and cohesiveness");
  ts->add_option("--pair", pair_args, "token pair a,b (repeatable)");
  ts->add_option("--token", ts_req.tokens, "token for cohesiveness and neighbour overlap (repeatable)");
  ts->add_flag("--gate-models", ts_req.gate_models, "treat models rejected by the analogy gate as gaps");
  bind_key(ts, ov, "--k", "k", "neighbours");
  bind_key(ts, ov, "--epsilon", "epsilon", "reversion tolerance");
  bind_key(ts, ov, "--slope-threshold", "slope_threshold", "monotone slope threshold per month");
  bind_key(ts, ov, "--r2-floor", "r2_floor", "monotone r-squared floor");
  bind_switch(ts, ov, "--csv", "csv", "true", "also write each series as CSV");

  auto* synth = app.add_subcommand("synth", "generate a planted-drift benchmark, run the pipeline and score it");
  bind_key(synth, ov, "--docs", "synth_docs", "documents per slice");
  bind_key(synth, ov, "--slices", "synth_slices", "number of monthly slices");
  bind_key(synth, ov, "--topics", "synth_topics", "topic count");
  bind_key(synth, ov, "--drifts", "synth_drifts", "planted drifts");
  bind_key(synth, ov, "--change-index", "synth_change_index", "slice index where drifts start");
  bind_key(synth, ov, "--style", "synth_style", "Abrupt, Gradual or Seasonal");
  bind_key(synth, ov, "--months", "synth_months", "ramp or period length");
  bind_key(synth, ov, "--synth-seed", "synth_seed", "generator seed");
  bind_key(synth, ov, "--beta", "beta", "threshold in standard deviations (>= 2)");
  bind_switch(synth, ov, "--unsafe-beta", "unsafe_beta", "true", "allow beta < 2");
  bind_key(synth, ov, "--epochs", "epochs", "training passes");
  bind_key(synth, ov, "--dim", "dim", "vector dimension");
  bind_key(synth, ov, "--subsample", "subsample", "subsampling threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return emodrift::kExitConfig;
  }

  try {
    Overrides all;
    for (const auto& s : sets) all.push_back(split_pair(s, '='));
    all.insert(all.end(), ov.begin(), ov.end());
    const auto cfg = emodrift::resolve_config(config_file, all);

    emodrift::CommandResult res;
    if (ingest->parsed()) {
      res = emodrift::cmd_ingest(cfg);
    } else if (train->parsed()) {
      res = emodrift::cmd_train(cfg);
    } else if (sanity->parsed()) {
      res = emodrift::cmd_sanity(cfg);
    } else if (drift->parsed()) {
      res = emodrift::cmd_drift(cfg, drift_req);
    } else if (ts->parsed()) {
      for (const auto& p : pair_args) ts_req.pairs.push_back(split_pair(p, ','));
      res = emodrift::cmd_timeseries(cfg, ts_req);
    } else if (synth->parsed()) {
      res = emodrift::cmd_synth(cfg);
    }
    std::cout << res.report_path.string() << '\n';
    return res.exit_code;
  } catch (const emodrift::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return emodrift::kExitConfig;
  } catch (const emodrift::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return emodrift::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return emodrift::kExitData;
  }
}
