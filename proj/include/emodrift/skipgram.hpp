#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "emodrift/embedding.hpp"
#include "emodrift/error.hpp"
#include "emodrift/random.hpp"
#include "emodrift/vocabulary.hpp"

namespace emodrift {

// ---------------------------------------------------------------------------
// Negative-sampling objective for one (center, context, negatives) triple.
//
//   loss = -log s(u_o . v_c) - sum_n log s(-u_n . v_c)
//
// where v_c is the center's input vector, u_o the context's output vector and
// u_n the output vectors of the sampled negatives. Training minimises it.
// ---------------------------------------------------------------------------

template <typename T>
T log_sigmoid(T x) {
  return x < T(0) ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

template <typename T>
T negative_sampling_loss(std::span<const T> center, std::span<const T> context,
                         const std::vector<std::span<const T>>& negatives) {
  T loss = -log_sigmoid(dot(context, center));
  for (const auto& n : negatives) loss -= log_sigmoid(-dot(n, center));
  return loss;
}

template <typename T>
struct NegativeSamplingGradient {
  std::vector<T> center;
  std::vector<T> context;
  std::vector<std::vector<T>> negatives;
};

template <typename T>
NegativeSamplingGradient<T> negative_sampling_gradient(std::span<const T> center, std::span<const T> context,
                                                       const std::vector<std::span<const T>>& negatives) {
  const std::size_t d = center.size();
  NegativeSamplingGradient<T> g;
  g.center.assign(d, T(0));
  g.context.assign(d, T(0));
  const T pos = sigmoid(dot(context, center)) - T(1);
  for (std::size_t k = 0; k < d; ++k) {
    g.center[k] += pos * context[k];
    g.context[k] = pos * center[k];
  }
  for (const auto& n : negatives) {
    const T neg = sigmoid(dot(n, center));
    std::vector<T> gn(d);
    for (std::size_t k = 0; k < d; ++k) {
      g.center[k] += neg * n[k];
      gn[k] = neg * center[k];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

// Walker/Vose alias table: O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw DataError("alias table needs at least one weight");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw DataError("alias table weights sum to zero");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small;
    std::vector<std::uint32_t> large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const auto s = small.back();
      small.pop_back();
      const auto l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) prob_[i] = 1.0;
    for (auto i : small) prob_[i] = 1.0;
  }

  std::uint32_t sample(Rng& rng) const {
    const auto i = static_cast<std::uint32_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

// Slice corpus mapped onto vocabulary ids; -1 marks an out-of-vocabulary
// position that still takes up a window slot.
struct EncodedCorpus {
  std::vector<std::int32_t> ids;
  std::vector<std::size_t> doc_offsets{0};

  std::size_t documents() const { return doc_offsets.size() - 1; }
  std::span<const std::int32_t> document(std::size_t d) const {
    return {ids.data() + doc_offsets[d], doc_offsets[d + 1] - doc_offsets[d]};
  }
  std::size_t in_vocabulary() const {
    return static_cast<std::size_t>(std::count_if(ids.begin(), ids.end(), [](auto i) { return i >= 0; }));
  }
};

inline EncodedCorpus encode_corpus(const std::vector<std::vector<std::string>>& documents,
                                   const SharedVocabulary& vocab, bool keep_oov_positions) {
  EncodedCorpus c;
  for (const auto& doc : documents) {
    for (const auto& tok : doc) {
      if (auto id = vocab.find(tok)) c.ids.push_back(static_cast<std::int32_t>(*id));
      else if (keep_oov_positions) c.ids.push_back(-1);
    }
    if (c.ids.size() != c.doc_offsets.back()) c.doc_offsets.push_back(c.ids.size());
  }
  return c;
}

struct TrainingStats {
  std::vector<double> epoch_loss;  // mean loss per (center, context) pair
  std::uint64_t pairs = 0;

  nlohmann::json to_json() const { return {{"epoch_loss", epoch_loss}, {"pairs", pairs}}; }
};

namespace detail {

struct PlainAccess {
  static float load(const float& x) { return x; }
  static void store(float& x, float v) { x = v; }
};

// Lock-free shared updates for multi-worker training: element-wise relaxed
// atomics, so concurrent updates may be lost but never tear.
struct RelaxedAccess {
  static float load(const float& x) {
    return std::atomic_ref<float>(const_cast<float&>(x)).load(std::memory_order_relaxed);
  }
  static void store(float& x, float v) { std::atomic_ref<float>(x).store(v, std::memory_order_relaxed); }
};

struct SkipGramState {
  std::size_t dim = 0;
  std::vector<float> input;   // center vectors
  std::vector<float> output;  // context vectors
  AliasTable noise;
  std::vector<double> keep_prob;
};

template <typename Access>
double update_pair(SkipGramState& st, std::uint32_t center, std::uint32_t context, std::size_t negatives,
                   float alpha, Rng& rng, std::vector<float>& grad) {
  const std::size_t d = st.dim;
  float* v = st.input.data() + static_cast<std::size_t>(center) * d;
  std::fill(grad.begin(), grad.end(), 0.0f);
  double loss = 0.0;
  for (std::size_t s = 0; s <= negatives; ++s) {
    std::uint32_t target = context;
    float label = 1.0f;
    if (s > 0) {
      target = st.noise.sample(rng);
      if (target == context) continue;
      label = 0.0f;
    }
    float* u = st.output.data() + static_cast<std::size_t>(target) * d;
    float f = 0.0f;
    for (std::size_t k = 0; k < d; ++k) f += Access::load(u[k]) * Access::load(v[k]);
    const double fd = f;
    loss -= label > 0.0f ? log_sigmoid(fd) : log_sigmoid(-fd);
    const float g = alpha * (label - static_cast<float>(sigmoid(fd)));
    for (std::size_t k = 0; k < d; ++k) {
      const float uk = Access::load(u[k]);
      grad[k] += g * uk;
      Access::store(u[k], uk + g * Access::load(v[k]));
    }
  }
  for (std::size_t k = 0; k < d; ++k) Access::store(v[k], Access::load(v[k]) + grad[k]);
  return loss;
}

template <typename Access>
void train_range(SkipGramState& st, const EncodedCorpus& corpus, const Hyperparameters& hp, std::size_t first_doc,
                 std::size_t last_doc, std::uint64_t stream, std::atomic<std::uint64_t>& processed,
                 std::uint64_t total_work, double& loss_sum, std::uint64_t& pair_count) {
  Rng rng(mix_seed(hp.seed, stream));
  std::vector<float> grad(st.dim);
  std::vector<std::int32_t> kept;
  const auto window = static_cast<std::ptrdiff_t>(hp.window);
  for (std::size_t doc = first_doc; doc < last_doc; ++doc) {
    const auto tokens = corpus.document(doc);
    const double progress = static_cast<double>(processed.load(std::memory_order_relaxed)) /
                            static_cast<double>(total_work + 1);
    const float alpha = static_cast<float>(hp.learning_rate * std::max(1e-4, 1.0 - progress));
    kept.clear();
    for (auto id : tokens) {
      if (id >= 0 && st.keep_prob[static_cast<std::size_t>(id)] < 1.0 &&
          rng.uniform() >= st.keep_prob[static_cast<std::size_t>(id)]) {
        continue;
      }
      kept.push_back(id);
    }
    const auto n = static_cast<std::ptrdiff_t>(kept.size());
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      if (kept[c] < 0) continue;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, c - window);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, c + window);
      for (std::ptrdiff_t o = lo; o <= hi; ++o) {
        if (o == c || kept[o] < 0) continue;
        loss_sum += update_pair<Access>(st, static_cast<std::uint32_t>(kept[c]), static_cast<std::uint32_t>(kept[o]),
                                        hp.negatives, alpha, rng, grad);
        ++pair_count;
      }
    }
    processed.fetch_add(tokens.size(), std::memory_order_relaxed);
  }
}

inline SkipGramState init_state(const EncodedCorpus& corpus, std::size_t vocab_size, const Hyperparameters& hp) {
  SkipGramState st;
  st.dim = hp.dim;
  st.input.resize(vocab_size * hp.dim);
  st.output.assign(vocab_size * hp.dim, 0.0f);
  Rng init(hp.seed);
  const double half = 0.5 / static_cast<double>(hp.dim);
  for (auto& x : st.input) x = static_cast<float>(init.uniform(-half, half));

  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (auto id : corpus.ids) {
    if (id >= 0) ++counts[static_cast<std::size_t>(id)];
  }
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  std::vector<double> weights(vocab_size);
  st.keep_prob.assign(vocab_size, 1.0);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    weights[i] = std::pow(static_cast<double>(counts[i]), 0.75);
    if (hp.subsample > 0.0 && counts[i] > 0) {
      const double f = static_cast<double>(counts[i]) / total;
      st.keep_prob[i] = std::min(1.0, (std::sqrt(f / hp.subsample) + 1.0) * hp.subsample / f);
    }
  }
  st.noise = AliasTable(weights);
  return st;
}

}  // namespace detail

// Skip-gram with negative sampling over one slice. With workers == 1 the
// result is a pure function of (corpus, vocabulary, hyperparameters); with
// more workers updates race and only the distribution of results is fixed.
inline EmbeddingModel train_skipgram(const EncodedCorpus& corpus, const SharedVocabulary& vocab,
                                     const Hyperparameters& hp, std::string slice = {},
                                     TrainingStats* stats = nullptr) {
  hp.validate();
  if (corpus.in_vocabulary() < 2) {
    throw DataError("slice " + slice + " has fewer than 2 in-vocabulary tokens");
  }
  auto st = detail::init_state(corpus, vocab.size(), hp);
  const std::uint64_t total_work = static_cast<std::uint64_t>(corpus.ids.size()) * hp.epochs;
  std::atomic<std::uint64_t> processed{0};
  TrainingStats local;
  const std::size_t workers = std::min(hp.workers, std::max<std::size_t>(1, corpus.documents()));
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    double loss = 0.0;
    std::uint64_t pairs = 0;
    if (workers == 1) {
      detail::train_range<detail::PlainAccess>(st, corpus, hp, 0, corpus.documents(), 1 + epoch, processed,
                                               total_work, loss, pairs);
    } else {
      std::vector<double> losses(workers, 0.0);
      std::vector<std::uint64_t> counts(workers, 0);
      std::vector<std::thread> threads;
      const std::size_t docs = corpus.documents();
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = docs * w / workers;
        const std::size_t hi = docs * (w + 1) / workers;
        threads.emplace_back([&, w, lo, hi] {
          detail::train_range<detail::RelaxedAccess>(st, corpus, hp, lo, hi, 1 + epoch * workers + w, processed,
                                                     total_work, losses[w], counts[w]);
        });
      }
      for (auto& t : threads) t.join();
      for (std::size_t w = 0; w < workers; ++w) {
        loss += losses[w];
        pairs += counts[w];
      }
    }
    local.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
    local.pairs += pairs;
  }
  for (float x : st.input) {
    if (!std::isfinite(x)) throw DataError("training diverged: non-finite vector entry in slice " + slice);
  }
  EmbeddingModel model(std::move(slice), vocab.tokens(), hp.dim);
  model.values() = std::move(st.input);
  model.set_hyperparameters(hp);
  if (stats != nullptr) *stats = std::move(local);
  return model;
}

}  // namespace emodrift
