#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "emodrift/corpus.hpp"
#include "emodrift/random.hpp"
#include "support.hpp"

using namespace emodrift;

namespace {

const EmojiProperties& props() { return EmojiProperties::standard(); }

std::string post(const std::string& text, std::int64_t ts, const std::string& platform, bool rt = false) {
  return nlohmann::json{{"text", text}, {"timestamp", ts}, {"platform", platform}, {"is_retweet", rt},
                        {"user_id", "u1"}}
      .dump();
}

constexpr std::int64_t kMay3_2016 = 1462233600;  // 2016-05-03T00:00:00Z

}  // namespace

TEST(Normalize, WorkedExample) {
  EXPECT_EQ(normalize("Check http://x.co NOW!! \U0001F600\U0001F600", props()), "check now ! ! \U0001F600 \U0001F600");
}

TEST(Normalize, Empty) { EXPECT_EQ(normalize("", props()), ""); }

TEST(Normalize, ZwjSequenceStaysWhole) {
  const std::string fam = "\U0001F469\u200D\U0001F469\u200D\U0001F466";
  EXPECT_EQ(normalize(fam, props()), fam);
}

// Each rule checked on its own.
TEST(Normalize, IndividualRules) {
  EXPECT_EQ(normalize("HeLLo", props()), "hello");
  EXPECT_EQ(normalize("a,b", props()), "a , b");
  EXPECT_EQ(normalize("see https://t.co/x?y=1 now", props()), "see now");
  EXPECT_EQ(normalize("hi @bob_1 there", props()), "hi there");
  EXPECT_EQ(normalize("mail me@home", props()), "mail me @ home");  // not a mention
  EXPECT_EQ(normalize("RT @user: hello", props()), "hello");
  EXPECT_EQ(normalize("  lots   of\t\nspace  ", props()), "lots of space");
  EXPECT_EQ(normalize("x\u0001y", props()), "x y");   // control character
  EXPECT_EQ(normalize("5$ + 3", props()), "5 3");     // non-emoji symbols
  EXPECT_EQ(normalize("\u00BFqu\u00E9?", props()), "\u00BF qu\u00E9 ?");
  EXPECT_EQ(normalize("\U0001F600\U0001F601", props()), "\U0001F600 \U0001F601");
}

TEST(Normalize, Idempotent) {
  const std::vector<std::string> samples = {
      "Check http://x.co NOW!! \U0001F600\U0001F600", "RT @a: B", "@x hi!!", "\U0001F1F5\U0001F1F9!!",
      "it's-a \U0001F44D\U0001F3FD test...", "\u200D lone", "caf\u00E9 \u00C9T\u00C9", "\U0001F469\u200D\U0001F469\u200D\U0001F466x"};
  for (const auto& s : samples) {
    const auto once = normalize(s, props());
    EXPECT_EQ(normalize(once, props()), once) << s;
  }
}

TEST(Normalize, IdempotentOnRandomText) {
  const std::u32string alphabet = U"aZ9 ,.!?@#:/_-\t\u200D\U0001F600\U0001F3FB\U0001F1F5\U0001F469\u00E9\u2764\uFE0F";
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::u32string s;
    const auto n = rng.below(20);
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
    const auto once = normalize(utf8::encode(s), props());
    EXPECT_EQ(normalize(once, props()), once);
  }
}

TEST(ParsePost, RejectsInvalidUtf8AndMissingFields) {
  EXPECT_THROW(parse_post("{\"timestamp\": 1}"), DataError);
  EXPECT_THROW(parse_post("not json"), DataError);
  EXPECT_THROW(parse_post("{\"text\": \"\\udc00\", \"timestamp\": 1}"), DataError);
  const auto p = parse_post(post("hi", 5, "Android", true));
  EXPECT_EQ(p.platform, Platform::Android);
  EXPECT_TRUE(p.is_retweet);
  EXPECT_EQ(p.user_id.value(), "u1");
}

TEST(Admit, Filters) {
  RawPost p;
  p.text = "great \U0001F600";
  p.is_retweet = true;
  EXPECT_FALSE(admit(p, props()));
  p.is_retweet = false;
  p.text = "   ";
  EXPECT_FALSE(admit(p, props()));
  p.text = "hello \U0001F600";
  EXPECT_TRUE(admit(p, props()));
  p.text = "hello";
  EXPECT_FALSE(admit(p, props()));
  EXPECT_TRUE(admit(p, props(), {.require_emoji = false}));
}

TEST(SliceGrid, IndexingAndSize) {
  SliceGrid g(YearMonth{2016, 5}, YearMonth{2019, 4}, {Platform::iOS, Platform::Android, Platform::Web});
  EXPECT_EQ(g.size(), 108u);
  EXPECT_EQ(g.index({YearMonth{2016, 5}, Platform::iOS}).value(), 1u);
  EXPECT_EQ(g.index({YearMonth{2016, 5}, Platform::Android}).value(), 2u);
  EXPECT_EQ(g.index({YearMonth{2019, 4}, Platform::Web}).value(), 108u);
  EXPECT_FALSE(g.index({YearMonth{2019, 5}, Platform::Web}).has_value());
  EXPECT_EQ(g.key(4).name(), "2016-06_iOS");
}

TEST(YearMonthTest, FromUnixAndParse) {
  EXPECT_EQ(YearMonth::from_unix(kMay3_2016), (YearMonth{2016, 5}));
  EXPECT_EQ(YearMonth::parse("2016-12").plus(1), (YearMonth{2017, 1}));
  EXPECT_THROW(YearMonth::parse("2016-13"), ConfigError);
  EXPECT_EQ(SliceKey::parse("2016-05_iOS"), (SliceKey{YearMonth{2016, 5}, Platform::iOS}));
}

TEST(Partition, RoutesPostsAndConservesCounts) {
  support::TempDir dir("partition");
  SliceGrid g(YearMonth{2016, 5}, YearMonth{2016, 6}, {Platform::iOS, Platform::Android, Platform::Other});
  std::stringstream in;
  in << post("one \U0001F600", kMay3_2016, "iOS") << '\n'
     << post("two \U0001F600", kMay3_2016 + 60, "Android") << '\n'
     << post("three \U0001F600", kMay3_2016 + 60, "Symbian") << '\n'     // unknown -> Other
     << post("rt \U0001F600", kMay3_2016, "iOS", true) << '\n'           // rejected
     << post("late \U0001F600", kMay3_2016 + 400 * 86400, "iOS") << '\n'  // outside grid
     << "{broken\n"
     << post("june \U0001F600", kMay3_2016 + 31 * 86400, "iOS") << '\n';
  const auto r = partition(in, g, dir.path(), props());
  EXPECT_EQ(r.read, 7u);
  EXPECT_EQ(r.malformed, 1u);
  EXPECT_EQ(r.rejected, 1u);
  EXPECT_EQ(r.admitted, 5u);
  EXPECT_EQ(r.out_of_grid, 1u);
  std::size_t docs = 0;
  for (const auto& [k, c] : r.slices) docs += c.documents;
  EXPECT_EQ(docs + r.out_of_grid, r.admitted);

  const auto ios = read_slice_documents(slice_path(dir.path(), {YearMonth{2016, 5}, Platform::iOS}));
  ASSERT_EQ(ios.size(), 1u);
  EXPECT_EQ(ios[0], (std::vector<std::string>{"one", "\U0001F600"}));
  EXPECT_EQ(read_slice_documents(slice_path(dir.path(), {YearMonth{2016, 5}, Platform::Android})).size(), 1u);
  EXPECT_EQ(read_slice_documents(slice_path(dir.path(), {YearMonth{2016, 5}, Platform::Other})).size(), 1u);
  EXPECT_EQ(read_slice_documents(slice_path(dir.path(), {YearMonth{2016, 6}, Platform::iOS})).size(), 1u);

  const auto manifest = nlohmann::json::parse(support::read_file(dir.path() / "manifest.json"));
  EXPECT_EQ(manifest["slices"]["2016-05_iOS"]["documents"], 1);
  EXPECT_EQ(manifest["slices"]["2016-05_iOS"]["skipped"], 1);
}

TEST(Partition, CollapseSkinTonesRewritesSliceText) {
  support::TempDir dir("collapse");
  SliceGrid g(YearMonth{2016, 5}, YearMonth{2016, 5}, {Platform::iOS});
  std::stringstream in(post("ok \U0001F44D\U0001F3FD", kMay3_2016, "iOS") + "\n");
  AdmitOptions opt;
  opt.collapse_skin_tones = true;
  partition(in, g, dir.path(), props(), opt);
  const auto docs = read_slice_documents(slice_path(dir.path(), g.key(1)));
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0][1], "\U0001F44D");
}
