#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "emodrift/commands.hpp"
#include "support.hpp"

using namespace emodrift;

namespace {

// Small corpus, three monthly slices, single-threaded training.
RunConfig small_run(const std::filesystem::path& workdir) {
  RunConfig c;
  c.workdir = workdir.string();
  c.hp.dim = 16;
  c.hp.epochs = 2;
  c.hp.subsample = 0;
  c.min_count = 1;
  c.k = 3;
  c.synth.topics = 4;
  c.synth.words_per_topic = 6;
  c.synth.emoji_per_topic = 2;
  c.synth.docs_per_slice = 600;
  c.synth.slices = 3;
  c.synth_drifts = 1;
  c.synth_change_index = 1;
  return c;
}

void write_corpus(const RunConfig& c) {
  synth::generate(c.synth, synth_drifts(c), c.slices_dir());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EMODRIFT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsValidate) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.grid().size(), 108u);
  EXPECT_EQ(c.detector().beta, 2.0);
}

TEST(Config, SetParsesAndRejects) {
  RunConfig c;
  c.set("dim", "32");
  c.set("beta", "3.5");
  c.set("csv", "true");
  c.set("distance", "similarity");
  EXPECT_EQ(c.hp.dim, 32u);
  EXPECT_EQ(c.beta, 3.5);
  EXPECT_TRUE(c.csv);
  EXPECT_EQ(c.distance_kind(), DistanceKind::Similarity);
  EXPECT_THROW(c.set("no_such_key", "1"), ConfigError);
  EXPECT_THROW(c.set("dim", "ten"), ConfigError);
  EXPECT_THROW(c.set("csv", "maybe"), ConfigError);
  c.set("distance", "manhattan");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, BetaBelowTwoNeedsExplicitOverride) {
  RunConfig c;
  c.beta = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.unsafe_beta = true;
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, FileThenEnvironmentThenOverrides) {
  support::TempDir dir("config");
  const auto file = dir.path() / "run.conf";
  std::ofstream(file) << "# comment\nbeta = 3\nworkdir = from_file\n\ndim = 40  # trailing\n";
  ::unsetenv("EMODRIFT_WORKDIR");
  auto c = resolve_config(file.string(), {});
  EXPECT_EQ(c.beta, 3.0);
  EXPECT_EQ(c.hp.dim, 40u);
  EXPECT_EQ(c.workdir, "from_file");
  ::setenv("EMODRIFT_WORKDIR", "from_env", 1);
  c = resolve_config(file.string(), {{"beta", "4"}});
  EXPECT_EQ(c.workdir, "from_env");
  EXPECT_EQ(c.beta, 4.0);
  c = resolve_config(file.string(), {{"workdir", "from_flag"}});
  EXPECT_EQ(c.workdir, "from_flag");
  ::unsetenv("EMODRIFT_WORKDIR");

  std::ofstream(dir.path() / "bad.conf") << "beta 3\n";
  EXPECT_THROW(resolve_config((dir.path() / "bad.conf").string(), {}), ConfigError);
  EXPECT_THROW(resolve_config((dir.path() / "missing.conf").string(), {}), ConfigError);
}

TEST(Commands, TrainTwiceIsByteIdentical) {
  support::TempDir a("train_a");
  support::TempDir b("train_b");
  const auto ca = small_run(a.path());
  const auto cb = small_run(b.path());
  write_corpus(ca);
  write_corpus(cb);
  cmd_train(ca);
  cmd_train(cb);
  const auto names = trained_slices(ca);
  ASSERT_EQ(names.size(), 3u);
  for (const auto& n : names) {
    const auto x = support::read_file(model_path(ca, n));
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, support::read_file(model_path(cb, n))) << n;
  }
}

TEST(Commands, DuplicatedSliceReportsNoDrift) {
  support::TempDir dir("null");
  const auto c = small_run(dir.path());
  write_corpus(c);
  const auto first = c.synth.slice_name(0);
  const auto second = c.synth.slice_name(1);
  std::filesystem::copy_file(c.slices_dir() / (first + ".txt"), c.slices_dir() / (second + ".txt"),
                             std::filesystem::copy_options::overwrite_existing);
  cmd_train(c);
  DriftRequest req{first, second, false};
  const auto r = cmd_drift(c, req);
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_TRUE(r.report["drifted_tokens"].empty());
  EXPECT_EQ(r.report["flagged_pair_count"], 0);
  EXPECT_EQ(r.report["mu"], 0.0);
  EXPECT_TRUE(std::filesystem::exists(r.report_path));
  EXPECT_EQ(r.report["command"], "drift");
  EXPECT_EQ(r.report["version"], std::string(kVersion));
}

TEST(Commands, SweepSanityAndTimeseries) {
  support::TempDir dir("sweep");
  auto c = small_run(dir.path());
  c.csv = true;
  write_corpus(c);
  cmd_train(c);
  DriftRequest req;
  req.sweep = true;
  const auto sweep = cmd_drift(c, req);
  EXPECT_EQ(sweep.report["sweep"].size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(c.reports_dir() / "drift" / (c.synth.slice_name(0) + "__" + c.synth.slice_name(1) + ".pairs.csv")));

  // The bundled suite has no synthetic tokens, so nothing is scored.
  const auto sanity = cmd_sanity(c);
  EXPECT_EQ(sanity.exit_code, kExitOk);
  EXPECT_EQ(sanity.report["models"][0]["verdict"], "UNTESTED");

  TimeseriesRequest ts;
  const auto token = synth::topic_emoji(c.synth, 0, 0);
  ts.pairs = {{token, "t0w0"}};
  ts.tokens = {token};
  const auto r = cmd_timeseries(c, ts);
  ASSERT_EQ(r.report["pairs"].size(), 1u);
  EXPECT_EQ(r.report["pairs"][0]["series"]["points"].size(), 3u);
  EXPECT_FALSE(r.report["pairs"][0]["trend"].is_null());
  EXPECT_TRUE(r.report["pairs"][0]["pattern"].is_null());  // fewer than 4 points
  EXPECT_EQ(r.report["tokens"][0]["slices"][0]["neighbor_overlap_with_first"], 1.0);
  EXPECT_THROW(cmd_timeseries(c, {}), ConfigError);
  ts.pairs = {{token, "not-a-token"}};
  EXPECT_THROW(cmd_timeseries(c, ts), DataError);
}

TEST(Commands, MissingModelsAreDataErrors) {
  support::TempDir dir("empty");
  const auto c = small_run(dir.path());
  EXPECT_THROW(cmd_drift(c, {"2016-05_iOS", "2016-06_iOS", false}), DataError);
  EXPECT_THROW(cmd_sanity(c), DataError);
}

TEST(Cli, ExitCodes) {
  support::TempDir dir("cli");
  const auto wd = dir.path().string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("--workdir " + wd + " drift --from a --to b --beta 1.5"), kExitConfig);
  EXPECT_EQ(run_cli("--workdir " + wd + " -s nope=1 drift --sweep"), kExitConfig);
  EXPECT_EQ(run_cli("--workdir " + wd + " drift --sweep"), kExitData);
  EXPECT_EQ(run_cli("frobnicate"), kExitConfig);
  EXPECT_EQ(run_cli("--workdir " + wd + " ingest --input " + wd + "/does-not-exist.jsonl"), kExitData);
}

TEST(Cli, IngestFromFileWritesSlices) {
  support::TempDir dir("cli_ingest");
  const auto input = dir.path() / "posts.jsonl";
  std::ofstream(input) << R"({"text": "hello 😀", "timestamp": 1462233600, "platform": "iOS"})" << '\n'
                       << R"({"text": "no emoji", "timestamp": 1462233600, "platform": "iOS"})" << '\n';
  const auto wd = (dir.path() / "work").string();
  ASSERT_EQ(run_cli("--workdir " + wd + " ingest --input " + input.string()), 0);
  const auto report = nlohmann::json::parse(support::read_file(dir.path() / "work" / "reports" / "ingest.json"));
  EXPECT_EQ(report["posts_read"], 2);
  EXPECT_EQ(report["rejected"], 1);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "work" / "slices" / "2016-05_iOS.txt"));
}
