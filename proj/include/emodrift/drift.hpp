#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/embedding.hpp"
#include "emodrift/error.hpp"
#include "emodrift/random.hpp"
#include "emodrift/shapiro_wilk.hpp"

namespace emodrift {

// Cosine distance (1 - cos) or raw cosine similarity. The drift indicator is
// the same under both because |d_i - d_j| = |s_i - s_j|.
enum class DistanceKind { Cosine, Similarity };

// Which entries of the shift matrix feed mu and sigma: each unordered pair
// once (strict upper triangle), or every entry including the zero diagonal.
enum class StatisticScope { UpperTriangle, FullMatrix };

inline std::string_view to_string(DistanceKind k) { return k == DistanceKind::Cosine ? "cosine" : "similarity"; }
inline std::string_view to_string(StatisticScope s) {
  return s == StatisticScope::UpperTriangle ? "upper-triangle" : "full-matrix";
}

struct DistanceMatrix {
  std::string slice;
  std::size_t n = 0;
  DistanceKind kind = DistanceKind::Cosine;
  std::vector<double> values;  // row-major n x n

  double at(std::size_t k, std::size_t l) const { return values[k * n + l]; }
};

struct ShiftMatrix {
  std::string from;
  std::string to;
  std::size_t n = 0;
  std::vector<double> values;  // |D_from - D_to|, row-major
  double mu = 0;
  double sigma = 0;  // population standard deviation
  StatisticScope scope = StatisticScope::UpperTriangle;

  double at(std::size_t k, std::size_t l) const { return values[k * n + l]; }
};

struct DriftIndicator {
  double beta = 2.0;
  std::size_t n = 0;
  std::vector<std::uint8_t> values;    // symmetric 0/1, zero diagonal
  std::vector<std::size_t> row_sums;   // sum_{p != k} values[k][p]
  bool conforming = true;              // beta >= 2
  bool degenerate_sigma = false;

  bool at(std::size_t k, std::size_t l) const { return values[k * n + l] != 0; }
};

namespace detail {

// Running count / mean / sum of squared deviations; merge() is Chan's
// pairwise update. Rows are merged in index order, so the result does not
// depend on how rows were distributed over workers.
struct Moments {
  double count = 0;
  double mean = 0;
  double m2 = 0;

  void add(double x) {
    count += 1;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }

  double population_sd() const { return count > 0 ? std::sqrt(std::max(0.0, m2 / count)) : 0.0; }
};

// Unit-normalised rows in double precision. Zero vectors are rejected;
// `name(r)` labels the offending row in the message.
template <typename Row, typename Name>
std::vector<double> unit_rows(std::size_t n, std::size_t d, Row&& row, Name&& name) {
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto v = row(r);
    double s = 0;
    for (std::size_t k = 0; k < d; ++k) s += static_cast<double>(v[k]) * v[k];
    if (!(s > 0)) throw DataError(name(r) + " has a zero vector");
    const double inv = 1.0 / std::sqrt(s);
    for (std::size_t k = 0; k < d; ++k) out[r * d + k] = v[k] * inv;
  }
  return out;
}

inline std::vector<double> unit_rows(const EmbeddingModel& model) {
  return unit_rows(
      model.size(), model.dim(), [&](std::size_t r) { return model.row(r); },
      [&](std::size_t r) { return "token '" + model.tokens()[r] + "' in model " + model.slice(); });
}

inline double pair_value(const std::vector<double>& unit, std::size_t d, std::size_t r, std::size_t c,
                         DistanceKind kind) {
  if (r == c) return kind == DistanceKind::Cosine ? 0.0 : 1.0;
  const double* a = unit.data() + r * d;
  const double* b = unit.data() + c * d;
  double s = 0;
  for (std::size_t k = 0; k < d; ++k) s += a[k] * b[k];
  s = std::clamp(s, -1.0, 1.0);
  return kind == DistanceKind::Cosine ? 1.0 - s : s;
}

// Runs fn(block_begin, block_end) over [0, n) in fixed-size blocks on up to
// `workers` threads.
template <typename Fn>
void for_each_block(std::size_t n, std::size_t block, std::size_t workers, Fn&& fn) {
  const std::size_t blocks = (n + block - 1) / block;
  workers = std::max<std::size_t>(1, std::min(workers, blocks));
  if (workers == 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b * block, std::min(n, (b + 1) * block));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      try {
        for (std::size_t b = next++; b < blocks; b = next++) fn(b * block, std::min(n, (b + 1) * block));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

inline bool in_scope(StatisticScope scope, std::size_t r, std::size_t c) {
  return scope == StatisticScope::FullMatrix || c > r;
}

inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

// Linear index of pair (r, c), r < c, in row-major strict-upper order.
inline std::size_t pair_index(std::size_t n, std::size_t r, std::size_t c) {
  return r * n - r * (r + 1) / 2 + (c - r - 1);
}

// Distinct indices in [0, population), sorted; every index when the
// population is not larger than `max_n` (Floyd's sampling otherwise).
inline std::vector<std::size_t> sample_indices(std::size_t population, std::size_t max_n, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (population <= max_n) {
    out.resize(population);
    for (std::size_t i = 0; i < population; ++i) out[i] = i;
    return out;
  }
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(max_n);
  std::vector<bool> taken;
  const bool dense = population <= (std::size_t{1} << 26);
  if (dense) taken.assign(population, false);
  std::unordered_set<std::size_t> sparse;
  for (std::size_t j = population - max_n; j < population; ++j) {
    const auto t = static_cast<std::size_t>(rng.below(j + 1));
    const bool seen = dense ? taken[t] : sparse.count(t) > 0;
    const std::size_t pick = seen ? j : t;
    if (dense) taken[pick] = true;
    else sparse.insert(pick);
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace detail

namespace detail {

inline DistanceMatrix distances_from_unit(const std::vector<double>& unit, std::size_t n, std::size_t d,
                                          std::string slice, DistanceKind kind, std::size_t workers) {
  DistanceMatrix m{std::move(slice), n, kind, std::vector<double>(n * n)};
  for_each_block(n, 64, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      for (std::size_t c = 0; c < n; ++c) m.values[r * n + c] = pair_value(unit, d, r, c, kind);
    }
  });
  return m;
}

}  // namespace detail

inline DistanceMatrix pairwise_distances(const EmbeddingModel& model, DistanceKind kind = DistanceKind::Cosine,
                                         std::size_t workers = 1) {
  return detail::distances_from_unit(detail::unit_rows(model), model.size(), model.dim(), model.slice(), kind,
                                     workers);
}

// Same computation on plain double vectors, for callers that hold embeddings
// outside a model (and for checks that must not round through float).
inline DistanceMatrix pairwise_distances(const std::vector<std::vector<double>>& vectors,
                                         DistanceKind kind = DistanceKind::Cosine, std::size_t workers = 1) {
  const std::size_t n = vectors.size();
  const std::size_t d = n ? vectors.front().size() : 0;
  for (const auto& v : vectors) {
    if (v.size() != d) throw DataError("vectors have different dimensions");
  }
  const auto unit = detail::unit_rows(
      n, d, [&](std::size_t r) { return vectors[r].data(); },
      [](std::size_t r) { return "row " + std::to_string(r); });
  return detail::distances_from_unit(unit, n, d, "", kind, workers);
}

inline ShiftMatrix baseline_shift(const DistanceMatrix& di, const DistanceMatrix& dj,
                                  StatisticScope scope = StatisticScope::UpperTriangle) {
  if (di.n != dj.n || di.values.size() != dj.values.size()) {
    throw DataError("distance matrices have different shapes (" + std::to_string(di.n) + " vs " +
                    std::to_string(dj.n) + ")");
  }
  if (di.kind != dj.kind) throw DataError("distance matrices use different distance functions");
  const std::size_t n = di.n;
  ShiftMatrix s{di.slice, dj.slice, n, std::vector<double>(n * n), 0, 0, scope};
  detail::Moments total;
  for (std::size_t r = 0; r < n; ++r) {
    detail::Moments row;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = std::abs(di.values[r * n + c] - dj.values[r * n + c]);
      s.values[r * n + c] = v;
      if (detail::in_scope(scope, r, c)) row.add(v);
    }
    total.merge(row);
  }
  s.mu = total.mean;
  s.sigma = total.population_sd();
  return s;
}

// Shapiro-Wilk on the strict upper triangle of the shift matrix, subsampled
// uniformly without replacement to at most max_n values.
inline ShapiroWilkResult normality_check(const ShiftMatrix& s, std::size_t max_n = 5000, std::uint64_t seed = 0) {
  const std::size_t pairs = detail::pair_count(s.n);
  if (pairs < 3) throw DataError("normality check needs at least 3 pairs");
  if (max_n < 3) throw ConfigError("normality sample cap must be at least 3");
  const auto idx = detail::sample_indices(pairs, std::min<std::size_t>(max_n, 5000), seed);
  std::vector<double> sample;
  sample.reserve(idx.size());
  std::size_t next = 0;
  for (std::size_t r = 0; r < s.n && next < idx.size(); ++r) {
    for (std::size_t c = r + 1; c < s.n && next < idx.size(); ++c) {
      if (detail::pair_index(s.n, r, c) == idx[next]) {
        sample.push_back(s.at(r, c));
        ++next;
      }
    }
  }
  return shapiro_wilk(std::move(sample));
}

inline void check_beta(double beta, bool allow_unsafe) {
  if (!std::isfinite(beta) || beta <= 0) throw ConfigError("beta must be a positive number");
  if (beta < 2.0 && !allow_unsafe) {
    throw ConfigError("beta must be >= 2 for a significant shift; pass the unsafe override to experiment");
  }
}

// Delta_kl = 1 iff |shift_kl - mu| > beta * sigma. With sigma = 0 no pair can
// pass the strict inequality and the result is all zero.
inline DriftIndicator drift_indicator(const ShiftMatrix& s, double beta, bool allow_unsafe_beta = false) {
  check_beta(beta, allow_unsafe_beta);
  const std::size_t n = s.n;
  DriftIndicator d;
  d.beta = beta;
  d.n = n;
  d.values.assign(n * n, 0);
  d.row_sums.assign(n, 0);
  d.conforming = beta >= 2.0;
  d.degenerate_sigma = s.sigma == 0.0;
  const double threshold = beta * s.sigma;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = k + 1; l < n; ++l) {
      if (std::abs(s.at(k, l) - s.mu) > threshold) {
        d.values[k * n + l] = d.values[l * n + k] = 1;
        ++d.row_sums[k];
        ++d.row_sums[l];
      }
    }
  }
  return d;
}

enum class Attribution { K, L, Both };

inline std::string_view to_string(Attribution a) {
  switch (a) {
    case Attribution::K: return "K";
    case Attribution::L: return "L";
    case Attribution::Both: return "Both";
  }
  return "Both";
}

// Which member of a flagged pair drifted: the one flagged against more tokens.
// Equal counts give Both.
inline Attribution attribute_by_counts(std::size_t row_k, std::size_t row_l) {
  if (row_k > row_l) return Attribution::K;
  if (row_k < row_l) return Attribution::L;
  return Attribution::Both;
}

inline Attribution attribute_shift(std::size_t k, std::size_t l, const DriftIndicator& delta) {
  if (k >= delta.n || l >= delta.n) throw Error("attribute_shift: token id out of range");
  if (!delta.at(k, l)) {
    throw Error("attribute_shift: pair (" + std::to_string(k) + ", " + std::to_string(l) + ") is not flagged");
  }
  return attribute_by_counts(delta.row_sums[k], delta.row_sums[l]);
}

struct DriftedToken {
  std::size_t id = 0;
  std::size_t evidence = 0;   // flagged pairs attributed to this token
  std::size_t exclusive = 0;  // ... of which it won outright (not a tie)

  friend bool operator==(const DriftedToken&, const DriftedToken&) = default;
};

struct FlaggedPair {
  std::size_t k = 0;
  std::size_t l = 0;
  double shift = 0;
};

inline std::vector<DriftedToken> drifted_tokens_from_pairs(const std::vector<FlaggedPair>& pairs,
                                                           const std::vector<std::size_t>& row_sums) {
  std::vector<DriftedToken> per(row_sums.size());
  for (std::size_t i = 0; i < per.size(); ++i) per[i].id = i;
  for (const auto& p : pairs) {
    switch (attribute_by_counts(row_sums[p.k], row_sums[p.l])) {
      case Attribution::K:
        ++per[p.k].evidence;
        ++per[p.k].exclusive;
        break;
      case Attribution::L:
        ++per[p.l].evidence;
        ++per[p.l].exclusive;
        break;
      case Attribution::Both:
        ++per[p.k].evidence;
        ++per[p.l].evidence;
        break;
    }
  }
  std::vector<DriftedToken> out;
  for (const auto& t : per) {
    if (t.evidence > 0) out.push_back(t);
  }
  return out;
}

// Every token that attribution picks for at least one flagged pair, in id order.
inline std::vector<DriftedToken> drifted_tokens(const DriftIndicator& delta) {
  std::vector<FlaggedPair> pairs;
  for (std::size_t k = 0; k < delta.n; ++k) {
    for (std::size_t l = k + 1; l < delta.n; ++l) {
      if (delta.at(k, l)) pairs.push_back({k, l, 0.0});
    }
  }
  return drifted_tokens_from_pairs(pairs, delta.row_sums);
}

// ---------------------------------------------------------------------------
// Blocked end-to-end detector. Distances are recomputed per row block in two
// passes (moments and normality sample, then flagging), so memory stays
// O(block * |V| + flagged pairs) and no |V| x |V| matrix is materialised.
// ---------------------------------------------------------------------------

struct DetectorOptions {
  double beta = 2.0;
  bool allow_unsafe_beta = false;
  DistanceKind distance = DistanceKind::Cosine;
  StatisticScope scope = StatisticScope::UpperTriangle;
  std::size_t normality_max_n = 5000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t block_rows = 0;  // 0 picks a size from |V|
};

struct DriftResult {
  std::string from_slice;
  std::string to_slice;
  std::vector<std::string> tokens;
  double beta = 2.0;
  bool conforming = true;
  double mu = 0;
  double sigma = 0;
  std::optional<ShapiroWilkResult> shapiro;
  std::vector<FlaggedPair> flagged;
  std::vector<std::size_t> row_sums;
  std::vector<DriftedToken> drifted;
  std::vector<std::string> warnings;
  DistanceKind distance = DistanceKind::Cosine;
  StatisticScope scope = StatisticScope::UpperTriangle;

  // Report layout consumed by downstream tools. `max_pairs` caps the
  // flagged_pairs array (0 = all); the total is always reported.
  nlohmann::json to_json(std::size_t max_pairs = 0) const {
    nlohmann::json pairs = nlohmann::json::array();
    std::vector<const FlaggedPair*> order;
    order.reserve(flagged.size());
    for (const auto& p : flagged) order.push_back(&p);
    if (max_pairs > 0 && order.size() > max_pairs) {
      std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->shift > b->shift; });
      order.resize(max_pairs);
    }
    for (const auto* p : order) pairs.push_back({{"a", tokens[p->k]}, {"b", tokens[p->l]}, {"shift", p->shift}});
    std::vector<DriftedToken> ranked = drifted;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.evidence > b.evidence; });
    nlohmann::json toks = nlohmann::json::array();
    for (const auto& t : ranked) {
      toks.push_back({{"token", tokens[t.id]},
                      {"evidence", t.evidence},
                      {"exclusive_evidence", t.exclusive},
                      {"attribution", t.exclusive > 0 ? "exclusive" : "tie"}});
    }
    nlohmann::json sw = nullptr;
    if (shapiro) sw = {{"W", shapiro->w}, {"p", shapiro->p}, {"sample_n", shapiro->n}};
    return {{"from_slice", from_slice},
            {"to_slice", to_slice},
            {"beta", beta},
            {"conforming", conforming},
            {"distance", std::string(to_string(distance))},
            {"statistic_scope", std::string(to_string(scope))},
            {"vocabulary_size", tokens.size()},
            {"mu", mu},
            {"sigma", sigma},
            {"shapiro", sw},
            {"flagged_pair_count", flagged.size()},
            {"flagged_pairs", pairs},
            {"drifted_tokens", toks},
            {"warnings", warnings}};
  }

  std::vector<std::string> drifted_surfaces() const {
    std::vector<std::string> out;
    for (const auto& t : drifted) out.push_back(tokens[t.id]);
    return out;
  }
};

inline void write_flagged_pairs_csv(const DriftResult& r, std::ostream& out) {
  out << "a,b,shift\n";
  char buf[64];
  for (const auto& p : r.flagged) {
    auto res = std::to_chars(buf, buf + sizeof buf, p.shift);
    out << r.tokens[p.k] << ',' << r.tokens[p.l] << ',' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

inline DriftResult detect_drift(const EmbeddingModel& from, const EmbeddingModel& to,
                                const DetectorOptions& opt = {}) {
  check_beta(opt.beta, opt.allow_unsafe_beta);
  if (!from.same_vocabulary(to)) {
    throw DataError("models " + from.slice() + " and " + to.slice() + " do not share a vocabulary");
  }
  const std::size_t n = from.size();
  if (n < 2) throw DataError("drift detection needs at least 2 tokens");
  const auto ui = detail::unit_rows(from);
  const auto uj = detail::unit_rows(to);
  const std::size_t di = from.dim();
  const std::size_t dj = to.dim();
  const std::size_t block = opt.block_rows > 0 ? opt.block_rows
                                               : std::clamp<std::size_t>((std::size_t{1} << 20) / n, 1, 256);
  const auto shift_at = [&](std::size_t r, std::size_t c) {
    return std::abs(detail::pair_value(ui, di, r, c, opt.distance) - detail::pair_value(uj, dj, r, c, opt.distance));
  };

  DriftResult res;
  res.from_slice = from.slice();
  res.to_slice = to.slice();
  res.tokens = from.tokens();
  res.beta = opt.beta;
  res.conforming = opt.beta >= 2.0;
  res.distance = opt.distance;
  res.scope = opt.scope;

  // Pass 1: per-row moments and the normality sample.
  const std::size_t pairs = detail::pair_count(n);
  const auto sample_idx = detail::sample_indices(pairs, std::min<std::size_t>(opt.normality_max_n, 5000), opt.seed);
  std::vector<double> sample(sample_idx.size());
  std::vector<detail::Moments> rows(n);
  detail::for_each_block(n, block, opt.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      detail::Moments m;
      const std::size_t base = r + 1 < n ? detail::pair_index(n, r, r + 1) : pairs;
      auto it = std::lower_bound(sample_idx.begin(), sample_idx.end(), base);
      for (std::size_t c = opt.scope == StatisticScope::FullMatrix ? 0 : r + 1; c < n; ++c) {
        const double v = shift_at(r, c);
        m.add(v);
        if (c > r && it != sample_idx.end() && *it == base + (c - r - 1)) {
          sample[static_cast<std::size_t>(it - sample_idx.begin())] = v;
          ++it;
        }
      }
      rows[r] = m;
    }
  });
  detail::Moments total;
  for (const auto& m : rows) total.merge(m);
  res.mu = total.mean;
  res.sigma = total.population_sd();

  if (sample.size() >= 3) {
    try {
      res.shapiro = shapiro_wilk(sample);
    } catch (const DataError& e) {
      res.warnings.push_back(std::string("normality check skipped: ") + e.what());
    }
  }
  if (res.sigma == 0.0) {
    res.warnings.push_back("degenerate sigma: shift matrix is constant, no pair can be flagged");
  }

  // Pass 2: flag pairs.
  const double threshold = opt.beta * res.sigma;
  const std::size_t blocks = (n + block - 1) / block;
  std::vector<std::vector<FlaggedPair>> per_block(blocks);
  detail::for_each_block(n, block, opt.workers, [&](std::size_t lo, std::size_t hi) {
    auto& out = per_block[lo / block];
    for (std::size_t r = lo; r < hi; ++r) {
      for (std::size_t c = r + 1; c < n; ++c) {
        const double v = shift_at(r, c);
        if (std::abs(v - res.mu) > threshold) out.push_back({r, c, v});
      }
    }
  });
  res.row_sums.assign(n, 0);
  for (auto& b : per_block) {
    for (const auto& p : b) {
      ++res.row_sums[p.k];
      ++res.row_sums[p.l];
      res.flagged.push_back(p);
    }
  }
  res.drifted = drifted_tokens_from_pairs(res.flagged, res.row_sums);
  return res;
}

}  // namespace emodrift
