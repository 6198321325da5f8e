#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "emodrift/embedding.hpp"
#include "emodrift/skipgram.hpp"
#include "emodrift/vocabulary.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace emodrift;

namespace {

SliceFrequencies freq(std::string name, std::map<std::string, std::uint64_t> counts) {
  SliceFrequencies f;
  f.name = std::move(name);
  for (const auto& [k, v] : counts) {
    f.counts[k] = v;
    f.total += v;
  }
  return f;
}

double cos_rows(const EmbeddingModel& m, const std::string& a, const std::string& b) {
  const auto x = m.row(m.index_of(a));
  const auto y = m.row(m.index_of(b));
  double d = 0, nx = 0, ny = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    d += double(x[k]) * y[k];
    nx += double(x[k]) * x[k];
    ny += double(y[k]) * y[k];
  }
  return d / std::sqrt(nx * ny);
}

Hyperparameters small_hp(std::uint64_t seed) {
  Hyperparameters hp;
  hp.dim = 20;
  hp.epochs = 5;
  hp.subsample = 0;
  hp.seed = seed;
  return hp;
}

}  // namespace

TEST(BuildVocab, IntersectionMatchesHandCount) {
  const auto a = freq("a", {{"x", 5}, {"y", 7}, {"z", 2}, {"only_a", 9}});
  const auto b = freq("b", {{"x", 6}, {"y", 1}, {"z", 8}});
  const auto v = build_vocab({a, b}, 2);
  // y fails in b (1 < 2); only_a is missing from b.
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"x", "z"}));  // totals 11 vs 10
  EXPECT_EQ(v.counts(0)[v.id("x")], 5u);
  EXPECT_EQ(v.counts(1)[v.id("z")], 8u);
  EXPECT_THROW(v.id("y"), DataError);
}

TEST(BuildVocab, TokenMissingFromOneSliceIsExcluded) {
  std::vector<SliceFrequencies> slices;
  for (int i = 0; i < 36; ++i) slices.push_back(freq("s" + std::to_string(i), {{"common", 10}, {"rare", i == 17 ? 0u : 10u}}));
  const auto v = build_vocab(slices, 5);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"common"}));
}

TEST(BuildVocab, IdenticalSlicesMinCountOne) {
  const auto a = freq("a", {{"p", 1}, {"q", 3}, {"r", 1}});
  const auto v = build_vocab({a, a}, 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"q", "p", "r"}));  // count desc, then surface
}

TEST(BuildVocab, EmptyIntersectionNamesSparsestSlices) {
  const auto a = freq("alpha", {{"x", 5}});
  const auto b = freq("beta", {{"y", 5}});
  try {
    build_vocab({a, b}, 1);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
  EXPECT_THROW(build_vocab({}, 1), ConfigError);
  EXPECT_THROW(build_vocab({a}, 0), ConfigError);
}

TEST(BuildVocab, RandomSlicesMatchBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SliceFrequencies> slices;
    for (int s = 0; s < 3; ++s) {
      std::map<std::string, std::uint64_t> c;
      for (int t = 0; t < 15; ++t) {
        const auto n = rng.below(6);
        if (n) c["t" + std::to_string(t)] = n;
      }
      slices.push_back(freq("s" + std::to_string(s), c));
    }
    const std::uint64_t min_count = 1 + rng.below(3);
    std::set<std::string> expected;
    for (int t = 0; t < 15; ++t) {
      const auto tok = "t" + std::to_string(t);
      bool ok = true;
      for (const auto& s : slices) ok = ok && s.counts.count(tok) && s.counts.at(tok) >= min_count;
      if (ok) expected.insert(tok);
    }
    if (expected.empty()) {
      EXPECT_THROW(build_vocab(slices, min_count), DataError);
      continue;
    }
    const auto v = build_vocab(slices, min_count);
    EXPECT_EQ(std::set<std::string>(v.tokens().begin(), v.tokens().end()), expected);
  }
}

TEST(ModelIo, RoundTripIsExact) {
  auto m = support::make_model(support::random_vectors(7, 5, 3));
  m.row(2)[1] = 1e-30f;
  m.row(3)[0] = -0.1f;
  std::stringstream ss;
  save_model(m, ss);
  const auto back = load_model(ss);
  EXPECT_TRUE(back == m);
}

TEST(ModelIo, HeaderCountMismatch) {
  std::stringstream ss("100 2\n");
  for (int i = 0; i < 99; ++i) ss << "t" << i << " 0.5 0.25\n";
  EXPECT_THROW(load_model(ss), DataError);
}

TEST(ModelIo, MalformedInputs) {
  std::stringstream nan("1 2\nx nan 0.1\n");
  EXPECT_THROW(load_model(nan), DataError);
  std::stringstream inf("1 2\nx 0.1 inf\n");
  EXPECT_THROW(load_model(inf), DataError);
  std::stringstream header("two 2\n");
  EXPECT_THROW(load_model(header), DataError);
  std::stringstream fields("1 3\nx 0.1 0.2\n");
  EXPECT_THROW(load_model(fields), DataError);
  std::stringstream junk("1 2\nx 0.1 0.2abc\n");
  EXPECT_THROW(load_model(junk), DataError);
}

TEST(SkipGram, GradientMatchesFiniteDifferences) {
  Rng rng(17);
  const std::size_t d = 8;
  const double h = 1e-6;
  const auto rand_vec = [&] {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal() * 0.5;
    return v;
  };
  for (int trial = 0; trial < 100; ++trial) {
    auto center = rand_vec();
    auto context = rand_vec();
    std::vector<std::vector<double>> negs{rand_vec(), rand_vec(), rand_vec()};
    const auto loss = [&] {
      std::vector<std::span<const double>> ns(negs.begin(), negs.end());
      return negative_sampling_loss<double>(center, context, ns);
    };
    std::vector<std::span<const double>> ns(negs.begin(), negs.end());
    const auto g = negative_sampling_gradient<double>(center, context, ns);
    const auto check = [&](std::vector<double>& x, const std::vector<double>& analytic) {
      for (std::size_t k = 0; k < d; ++k) {
        const double keep = x[k];
        x[k] = keep + h;
        const double up = loss();
        x[k] = keep - h;
        const double down = loss();
        x[k] = keep;
        const double numeric = (up - down) / (2 * h);
        EXPECT_LE(std::fabs(numeric - analytic[k]), 1e-5 * std::max(1.0, std::fabs(analytic[k])));
      }
    };
    check(center, g.center);
    check(context, g.context);
    for (std::size_t n = 0; n < negs.size(); ++n) check(negs[n], g.negatives[n]);
  }
}

// The trainer's in-place update is one gradient step of the same loss.
TEST(SkipGram, TrainerStepFollowsAnalyticGradient) {
  detail::SkipGramState st;
  st.dim = 4;
  st.input = {0.1f, -0.2f, 0.3f, 0.05f, 0.2f, 0.1f, -0.1f, 0.4f, 0.0f, 0.0f, 0.0f, 0.0f};
  st.output = {0.3f, 0.1f, 0.2f, -0.3f, -0.1f, 0.2f, 0.5f, 0.1f, 0.2f, -0.4f, 0.1f, 0.3f};
  st.noise = AliasTable({0.0, 0.0, 1.0});  // every negative is token 2
  st.keep_prob = {1, 1, 1};
  const auto as_double = [](const float* p) { return std::vector<double>(p, p + 4); };
  const auto v = as_double(&st.input[0]);
  const auto u = as_double(&st.output[4]);
  const auto n = as_double(&st.output[8]);
  const auto g = negative_sampling_gradient<double>(v, u, {std::span<const double>(n)});
  Rng rng(1);
  std::vector<float> scratch(4);
  const float alpha = 0.1f;
  detail::update_pair<detail::PlainAccess>(st, 0, 1, 1, alpha, rng, scratch);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(st.input[k], v[k] - alpha * g.center[k], 1e-6);
    EXPECT_NEAR(st.output[4 + k], u[k] - alpha * g.context[k], 1e-6);
    EXPECT_NEAR(st.output[8 + k], n[k] - alpha * g.negatives[0][k], 1e-6);
  }
}

TEST(SkipGram, AliasTableMatchesWeights) {
  AliasTable t({1.0, 3.0, 0.0, 4.0});
  Rng rng(2);
  std::vector<int> hits(4, 0);
  const int draws = 80000;
  for (int i = 0; i < draws; ++i) ++hits[t.sample(rng)];
  EXPECT_EQ(hits[2], 0);
  EXPECT_NEAR(hits[0] / double(draws), 0.125, 0.01);
  EXPECT_NEAR(hits[1] / double(draws), 0.375, 0.01);
  EXPECT_NEAR(hits[3] / double(draws), 0.5, 0.01);
}

TEST(SkipGram, TooFewTokensIsAnError) {
  const auto vocab = SharedVocabulary::from_tokens({"a", "b"});
  EXPECT_THROW(train_skipgram(encode_corpus({}, vocab, true), vocab, small_hp(1)), DataError);
  EXPECT_THROW(train_skipgram(encode_corpus({{"a"}}, vocab, true), vocab, small_hp(1)), DataError);
}

TEST(SkipGram, OovPositionsOccupyWindowWhenConfigured) {
  const auto vocab = SharedVocabulary::from_tokens({"a", "b"});
  const auto kept = encode_corpus({{"a", "zz", "b"}}, vocab, true);
  EXPECT_EQ(kept.ids, (std::vector<std::int32_t>{0, -1, 1}));
  const auto dropped = encode_corpus({{"a", "zz", "b"}}, vocab, false);
  EXPECT_EQ(dropped.ids, (std::vector<std::int32_t>{0, 1}));
}

TEST(SkipGram, SingleWorkerIsBitReproducible) {
  const auto docs = support::identical_context_corpus(4, 500);
  std::vector<SliceFrequencies> f{count_tokens("s", docs)};
  const auto vocab = build_vocab(f, 1);
  const auto corpus = encode_corpus(docs, vocab, true);
  auto hp = small_hp(9);
  hp.subsample = 1e-3;
  const auto m1 = train_skipgram(corpus, vocab, hp);
  const auto m2 = train_skipgram(corpus, vocab, hp);
  EXPECT_TRUE(m1 == m2);
  hp.seed = 10;
  EXPECT_FALSE(m1 == train_skipgram(corpus, vocab, hp));
}

TEST(SkipGram, LossDecreasesAndEntriesFinite) {
  const auto docs = support::identical_context_corpus(6, 1500);
  std::vector<SliceFrequencies> f{count_tokens("s", docs)};
  const auto vocab = build_vocab(f, 1);
  TrainingStats stats;
  const auto m = train_skipgram(encode_corpus(docs, vocab, true), vocab, small_hp(3), "s", &stats);
  ASSERT_EQ(stats.epoch_loss.size(), 5u);
  EXPECT_LT(stats.epoch_loss.back(), stats.epoch_loss.front());
  for (float x : m.values()) EXPECT_TRUE(std::isfinite(x));
}

TEST(SkipGram, SharedContextsBeatDisjointOnes) {
  const auto docs = support::identical_context_corpus(21);
  std::vector<SliceFrequencies> f{count_tokens("s", docs)};
  const auto vocab = build_vocab(f, 1);
  const auto m = train_skipgram(encode_corpus(docs, vocab, true), vocab, small_hp(21));
  EXPECT_GT(cos_rows(m, "a", "b"), cos_rows(m, "a", "c"));
  const auto p = oracle::ppmi(docs, 5);
  EXPECT_GT(oracle::sparse_cosine(p.at("a"), p.at("b")), oracle::sparse_cosine(p.at("a"), p.at("c")));
}

TEST(SkipGram, MultiWorkerProducesFiniteModel) {
  const auto docs = support::identical_context_corpus(8, 1500);
  std::vector<SliceFrequencies> f{count_tokens("s", docs)};
  const auto vocab = build_vocab(f, 1);
  auto hp = small_hp(8);
  hp.workers = 3;
  const auto m = train_skipgram(encode_corpus(docs, vocab, true), vocab, hp);
  for (float x : m.values()) EXPECT_TRUE(std::isfinite(x));
  EXPECT_GT(cos_rows(m, "a", "b"), cos_rows(m, "a", "c"));
}
