#include <gtest/gtest.h>

#include <map>

#include "emodrift/corpus.hpp"
#include "emodrift/synthetic.hpp"
#include "emodrift/tokenizer.hpp"
#include "support.hpp"

using namespace emodrift;
using namespace emodrift::synth;

namespace {

GeneratorConfig small_cfg() {
  GeneratorConfig c;
  c.topics = 4;
  c.words_per_topic = 5;
  c.emoji_per_topic = 2;
  c.docs_per_slice = 400;
  c.slices = 6;
  return c;
}

DriftSpec spec(const GeneratorConfig& c, DriftStyle style, int months, int change_index = 2) {
  DriftSpec d;
  d.token = topic_emoji(c, 0, 0);
  d.topic_before = 0;
  d.topic_after = 1;
  d.change = c.period(static_cast<std::size_t>(change_index));
  d.style = style;
  d.months = months;
  return d;
}

}  // namespace

TEST(DriftSpecTest, AfterWeightPerStyle) {
  const auto c = small_cfg();
  const auto abrupt = spec(c, DriftStyle::Abrupt, 1);
  EXPECT_EQ(abrupt.after_weight(c.period(1)), 0.0);
  EXPECT_EQ(abrupt.after_weight(c.period(2)), 1.0);
  EXPECT_EQ(abrupt.after_weight(c.period(5)), 1.0);
  const auto gradual = spec(c, DriftStyle::Gradual, 4);
  EXPECT_EQ(gradual.after_weight(c.period(2)), 0.25);
  EXPECT_EQ(gradual.after_weight(c.period(4)), 0.75);
  EXPECT_EQ(gradual.after_weight(c.period(9)), 1.0);
  const auto seasonal = spec(c, DriftStyle::Seasonal, 12);
  for (int dt = 0; dt < 36; ++dt) {
    const double w = seasonal.after_weight(c.period(2).plus(dt));
    EXPECT_EQ(w, dt % 12 < 6 ? 1.0 : 0.0) << dt;
    EXPECT_EQ(w, seasonal.after_weight(c.period(2).plus(dt + 12)));
  }
}

TEST(DriftSpecTest, JsonRoundTrip) {
  const auto c = small_cfg();
  for (auto style : {DriftStyle::Abrupt, DriftStyle::Gradual, DriftStyle::Seasonal}) {
    const auto d = spec(c, style, 3);
    const auto back = DriftSpec::from_json(d.to_json());
    EXPECT_EQ(back.token, d.token);
    EXPECT_EQ(back.change, d.change);
    EXPECT_EQ(back.style, d.style);
    if (style != DriftStyle::Abrupt) {
      EXPECT_EQ(back.months, 3);
    }
  }
  EXPECT_THROW(parse_style("Sudden"), ConfigError);
}

TEST(ValidateDrifts, RejectsBadSpecs) {
  const auto c = small_cfg();
  auto d = spec(c, DriftStyle::Abrupt, 1);
  EXPECT_NO_THROW(validate_drifts(c, {d}));
  auto stranger = d;
  stranger.token = topic_emoji(c, 3, 0);
  EXPECT_THROW(validate_drifts(c, {stranger}), ConfigError);
  auto same = d;
  same.topic_after = 0;
  EXPECT_THROW(validate_drifts(c, {same}), ConfigError);
  auto late = d;
  late.change = c.period(c.slices);
  EXPECT_THROW(validate_drifts(c, {late}), ConfigError);
  EXPECT_THROW(validate_drifts(c, {d, d}), ConfigError);
}

TEST(Generator, DeterministicAndSeedSensitive) {
  const auto c = small_cfg();
  const std::vector<DriftSpec> drifts = {spec(c, DriftStyle::Abrupt, 1)};
  EXPECT_EQ(generate_slice(c, drifts, 3), generate_slice(c, drifts, 3));
  auto other = c;
  other.seed = 8;
  EXPECT_NE(generate_slice(c, drifts, 3), generate_slice(other, drifts, 3));
  EXPECT_NE(generate_slice(c, drifts, 3), generate_slice(c, drifts, 4));
}

TEST(Generator, DriftMovesTokenBetweenTopics) {
  auto c = small_cfg();
  c.docs_per_slice = 2000;
  const auto d = spec(c, DriftStyle::Abrupt, 1);
  const auto before_word = "t0w0";
  const auto after_word = "t1w0";
  const auto cooccur = [&](std::size_t slice, const std::string& word) {
    std::size_t n = 0;
    for (const auto& doc : generate_slice(c, {d}, slice)) {
      if (doc.find(d.token) != std::string::npos && doc.find(word) != std::string::npos) ++n;
    }
    return n;
  };
  EXPECT_GT(cooccur(1, before_word), 0u);
  EXPECT_EQ(cooccur(1, after_word), 0u);
  EXPECT_EQ(cooccur(3, before_word), 0u);
  EXPECT_GT(cooccur(3, after_word), 0u);
}

TEST(Generator, EmojiTokenizeAsSingleTokens) {
  const auto c = small_cfg();
  for (std::size_t t = 0; t < c.topics; ++t) {
    for (std::size_t j = 0; j < c.emoji_per_topic; ++j) {
      const auto toks = tokenize(topic_emoji(c, t, j), EmojiProperties::standard());
      ASSERT_EQ(toks.size(), 1u);
      EXPECT_EQ(toks[0].kind, TokenKind::Emoji);
    }
  }
  // Generated text is already in normalised form.
  for (const auto& doc : generate_slice(c, {}, 0)) EXPECT_EQ(normalize(doc, EmojiProperties::standard()), doc);
}

TEST(Generator, WritesIngestLayoutAndTruth) {
  support::TempDir dir("synth");
  auto c = small_cfg();
  c.workers = 3;
  const auto truth = generate(c, default_drifts(c, 2, c.period(2)), dir.path());
  EXPECT_EQ(truth.slices.size(), c.slices);
  EXPECT_EQ(truth.slices[0], "2016-05_iOS");
  const auto docs = read_slice_documents(dir.path() / "2016-07_iOS.txt");
  EXPECT_EQ(docs.size(), c.docs_per_slice);
  auto serial = c;
  serial.workers = 1;
  EXPECT_EQ(docs.size(), generate_slice(serial, truth.drifts, 2).size());
  const auto loaded = load_ground_truth(dir.path() / "truth.json");
  ASSERT_EQ(loaded.drifts.size(), 2u);
  EXPECT_EQ(loaded.drifts[1].token, topic_emoji(c, 2, 0));
  EXPECT_EQ(loaded.slices, truth.slices);
}

TEST(DefaultDrifts, NeedsEnoughTopics) {
  const auto c = small_cfg();
  EXPECT_EQ(default_drifts(c, 2, c.period(1)).size(), 2u);
  EXPECT_THROW(default_drifts(c, 3, c.period(1)), ConfigError);
}

TEST(Scoring, PrecisionRecallAndEdges) {
  const auto c = small_cfg();
  GroundTruth truth;
  for (std::size_t s = 0; s < c.slices; ++s) truth.slices.push_back(c.slice_name(s));
  truth.drifts = default_drifts(c, 2, c.period(2));
  const auto a = truth.drifts[0].token;
  const auto b = truth.drifts[1].token;

  // Spanning comparison finds one planted token and one stray.
  auto s = score({{truth.slices[1], truth.slices[2], {a, "t3w1"}}}, truth);
  EXPECT_EQ(s.recall, 0.5);
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.false_positives, std::vector<std::string>{"t3w1"});
  EXPECT_EQ(s.recall_by_style.at("Abrupt"), 0.5);

  // Reporting the token on a comparison that does not span the change does not count.
  s = score({{truth.slices[3], truth.slices[4], {b}}}, truth);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.precision, 0.0);

  // Nothing reported.
  s = score({{truth.slices[1], truth.slices[2], {}}}, truth);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.reported, 0u);

  // Backwards comparison spans as well.
  s = score({{truth.slices[4], truth.slices[0], {a, b}}}, truth);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.precision, 1.0);

  EXPECT_THROW(score({{"2030-01_iOS", truth.slices[0], {}}}, truth), DataError);
}
