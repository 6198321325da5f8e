#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/corpus.hpp"
#include "emodrift/embedding.hpp"
#include "emodrift/error.hpp"

namespace emodrift {

struct SeriesPoint {
  std::string slice;
  int period_index = 0;               // months since the first model's period
  std::optional<double> similarity;   // empty = gap (model rejected)
};

struct SimilaritySeries {
  std::string a;
  std::string b;
  std::vector<SeriesPoint> points;

  std::vector<std::pair<double, double>> observed() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : points) {
      if (p.similarity) out.emplace_back(static_cast<double>(p.period_index), *p.similarity);
    }
    return out;
  }
};

struct TrendFit {
  double slope = 0;      // similarity units per month
  double intercept = 0;
  double r_squared = 0;
  std::size_t n = 0;
  double residual_sd = 0;
};

inline double cosine_similarity(std::span<const float> x, std::span<const float> y) {
  double dp = 0;
  double nx = 0;
  double ny = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    dp += static_cast<double>(x[k]) * y[k];
    nx += static_cast<double>(x[k]) * x[k];
    ny += static_cast<double>(y[k]) * y[k];
  }
  if (!(nx > 0) || !(ny > 0)) throw DataError("cosine similarity of a zero vector");
  return std::clamp(dp / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

struct SeriesInput {
  const EmbeddingModel* model = nullptr;
  bool accepted = true;  // false leaves a gap at this period
};

// Period of a model, taken from its slice name ("YYYY-MM_Platform" or
// "YYYY-MM"); models without a parseable name are indexed by position.
inline std::optional<YearMonth> model_period(const EmbeddingModel& m) {
  const auto& s = m.slice();
  if (s.size() < 7) return std::nullopt;
  try {
    return YearMonth::parse(std::string_view(s).substr(0, 7));
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

inline SimilaritySeries similarity_series(const std::vector<SeriesInput>& models, const std::string& a,
                                          const std::string& b) {
  SimilaritySeries s{a, b, {}};
  if (models.empty()) return s;
  const auto first = model_period(*models.front().model);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = *models[i].model;
    const auto ia = m.index_of(a);
    const auto ib = m.index_of(b);
    SeriesPoint p;
    p.slice = m.slice();
    const auto period = model_period(m);
    p.period_index = first && period ? period->ordinal() - first->ordinal() : static_cast<int>(i);
    if (models[i].accepted) p.similarity = ia == ib ? 1.0 : cosine_similarity(m.row(ia), m.row(ib));
    s.points.push_back(std::move(p));
  }
  std::stable_sort(s.points.begin(), s.points.end(),
                   [](const auto& x, const auto& y) { return x.period_index < y.period_index; });
  return s;
}

// Ordinary least squares y = intercept + slope * t over the observed points.
// A constant series has slope exactly 0 and r_squared 0 by convention.
inline TrendFit linear_trend(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) throw DataError("a trend needs at least 2 points");
  const double n = static_cast<double>(pts.size());
  double st = 0;
  double sy = 0;
  for (const auto& [t, y] : pts) {
    st += t;
    sy += y;
  }
  const double tbar = st / n;
  const double ybar = sy / n;
  double stt = 0;
  double sty = 0;
  double syy = 0;
  for (const auto& [t, y] : pts) {
    stt += (t - tbar) * (t - tbar);
    sty += (t - tbar) * (y - ybar);
    syy += (y - ybar) * (y - ybar);
  }
  if (stt == 0) throw DataError("all time stamps are identical");
  TrendFit fit;
  fit.n = pts.size();
  const bool constant = std::all_of(pts.begin(), pts.end(), [&](const auto& p) { return p.second == pts[0].second; });
  if (constant) {
    fit.slope = 0.0;
    fit.intercept = pts[0].second;
    fit.r_squared = 0.0;
    return fit;
  }
  fit.slope = sty / stt;
  fit.intercept = ybar - fit.slope * tbar;
  double ssr = 0;
  for (const auto& [t, y] : pts) {
    const double e = y - (fit.intercept + fit.slope * t);
    ssr += e * e;
  }
  fit.r_squared = syy > 0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 0.0;
  fit.residual_sd = std::sqrt(ssr / n);
  return fit;
}

inline TrendFit linear_trend(const SimilaritySeries& series) { return linear_trend(series.observed()); }

namespace detail {

inline std::vector<double> unit_row(const EmbeddingModel& m, std::size_t r) {
  std::vector<double> u(m.dim());
  double s = 0;
  for (float x : m.row(r)) s += static_cast<double>(x) * x;
  if (!(s > 0)) throw DataError("token '" + m.tokens()[r] + "' has a zero vector");
  const double inv = 1.0 / std::sqrt(s);
  for (std::size_t k = 0; k < m.dim(); ++k) u[k] = m.row(r)[k] * inv;
  return u;
}

inline double unit_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return 1.0 - std::clamp(s, -1.0, 1.0);
}

inline void check_k(const EmbeddingModel& m, std::size_t k) {
  if (k == 0) throw ConfigError("k must be positive");
  if (k >= m.size()) throw ConfigError("k must be smaller than the vocabulary size");
}

}  // namespace detail

struct Neighbor {
  std::size_t id = 0;
  double distance = 0;
};

// k nearest tokens by cosine distance, excluding the token itself; ties go to
// the smaller row id.
inline std::vector<Neighbor> nearest_neighbors(const EmbeddingModel& m, std::size_t row, std::size_t k) {
  detail::check_k(m, k);
  const auto q = detail::unit_row(m, row);
  std::vector<Neighbor> all;
  all.reserve(m.size() - 1);
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (r == row) continue;
    all.push_back({r, detail::unit_distance(q, detail::unit_row(m, r))});
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), [](const auto& x, const auto& y) {
    return x.distance != y.distance ? x.distance < y.distance : x.id < y.id;
  });
  all.resize(k);
  return all;
}

struct Cohesiveness {
  double centroid_dist = 0;                      // token vs mean of its neighbours' unit vectors
  double knn_mean_dist = 0;                      // mean distance token -> neighbours
  std::optional<double> knn_pairwise_mean_dist;  // mean over neighbour pairs; absent when k = 1
  std::vector<std::string> neighbors;
};

inline Cohesiveness cohesiveness(const EmbeddingModel& m, const std::string& token, std::size_t k) {
  const auto row = m.index_of(token);
  const auto nn = nearest_neighbors(m, row, k);
  Cohesiveness c;
  std::vector<std::vector<double>> units;
  for (const auto& n : nn) {
    c.knn_mean_dist += n.distance;
    c.neighbors.push_back(m.tokens()[n.id]);
    units.push_back(detail::unit_row(m, n.id));
  }
  c.knn_mean_dist /= static_cast<double>(k);
  std::vector<double> centroid(m.dim(), 0.0);
  for (const auto& u : units) {
    for (std::size_t d = 0; d < u.size(); ++d) centroid[d] += u[d] / static_cast<double>(k);
  }
  double cn = 0;
  for (double x : centroid) cn += x * x;
  const auto q = detail::unit_row(m, row);
  if (cn > 0) {
    for (double& x : centroid) x /= std::sqrt(cn);
    c.centroid_dist = detail::unit_distance(q, centroid);
  } else {
    c.centroid_dist = 1.0;
  }
  if (k >= 2) {
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) sum += detail::unit_distance(units[i], units[j]);
    }
    c.knn_pairwise_mean_dist = sum / static_cast<double>(k * (k - 1) / 2);
  }
  return c;
}

// |NN_k(Mi, token) ∩ NN_k(Mj, token)| / k, neighbours compared by surface.
inline double neighbor_overlap(const EmbeddingModel& mi, const EmbeddingModel& mj, const std::string& token,
                               std::size_t k) {
  const auto ni = nearest_neighbors(mi, mi.index_of(token), k);
  const auto nj = nearest_neighbors(mj, mj.index_of(token), k);
  std::unordered_set<std::string> left;
  for (const auto& n : ni) left.insert(mi.tokens()[n.id]);
  std::size_t common = 0;
  for (const auto& n : nj) common += left.count(mj.tokens()[n.id]);
  return static_cast<double>(common) / static_cast<double>(k);
}

enum class Pattern { Stable, MonotoneDrift, RevertingDrift, Scattered };

inline std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::Stable: return "Stable";
    case Pattern::MonotoneDrift: return "MonotoneDrift";
    case Pattern::RevertingDrift: return "RevertingDrift";
    case Pattern::Scattered: return "Scattered";
  }
  return "Stable";
}

struct PatternThresholds {
  double epsilon = 0.05;      // cosine-similarity units
  double slope = 0.01;        // per month
  double r_squared_floor = 0.5;
};

// Checked in order: RevertingDrift (leaves the first value by more than
// epsilon and ends within epsilon of it), MonotoneDrift (|slope| above the
// threshold with a good fit), Scattered (flat trend but residual spread above
// epsilon), otherwise Stable.
inline Pattern classify_pattern(const SimilaritySeries& series, const TrendFit& fit,
                                const PatternThresholds& th = {}) {
  const auto pts = series.observed();
  if (pts.size() < 4) throw DataError("pattern classification needs at least 4 observed points");
  const double first = pts.front().second;
  double max_dev = 0;
  for (const auto& p : pts) max_dev = std::max(max_dev, std::abs(p.second - first));
  if (max_dev > th.epsilon && std::abs(pts.back().second - first) <= th.epsilon) return Pattern::RevertingDrift;
  if (std::abs(fit.slope) > th.slope && fit.r_squared >= th.r_squared_floor) return Pattern::MonotoneDrift;
  if (std::abs(fit.slope) <= th.slope && fit.residual_sd > th.epsilon) return Pattern::Scattered;
  return Pattern::Stable;
}

inline nlohmann::json to_json(const SimilaritySeries& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : s.points) {
    pts.push_back({{"slice", p.slice},
                   {"period_index", p.period_index},
                   {"similarity", p.similarity ? nlohmann::json(*p.similarity) : nlohmann::json(nullptr)}});
  }
  return {{"a", s.a}, {"b", s.b}, {"points", pts}};
}

inline nlohmann::json to_json(const TrendFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"n", f.n},
          {"residual_sd", f.residual_sd}};
}

inline nlohmann::json to_json(const Cohesiveness& c) {
  return {{"centroid_dist", c.centroid_dist},
          {"knn_mean_dist", c.knn_mean_dist},
          {"knn_pairwise_mean_dist",
           c.knn_pairwise_mean_dist ? nlohmann::json(*c.knn_pairwise_mean_dist) : nlohmann::json(nullptr)},
          {"neighbors", c.neighbors}};
}

// (slice, period_index, similarity) rows; gaps have an empty similarity.
inline void write_series_csv(const SimilaritySeries& s, std::ostream& out) {
  out << "slice,period_index,similarity\n";
  for (const auto& p : s.points) {
    out << p.slice << ',' << p.period_index << ',';
    if (p.similarity) {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, *p.similarity);
      out << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace emodrift
