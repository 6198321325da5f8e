#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/error.hpp"
#include "emodrift/vocabulary.hpp"

namespace emodrift {

struct Hyperparameters {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  double subsample = 1e-4;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  // Out-of-vocabulary tokens still occupy window positions.
  bool oov_occupies_window = true;

  void validate() const {
    if (dim == 0) throw ConfigError("dim must be positive");
    if (window == 0) throw ConfigError("window must be positive");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (subsample < 0.0) throw ConfigError("subsample threshold must be non-negative");
    if (workers == 0) throw ConfigError("workers must be positive");
  }

  nlohmann::json to_json() const {
    return {{"dim", dim},         {"window", window},   {"negatives", negatives},
            {"epochs", epochs},   {"learning_rate", learning_rate},
            {"subsample", subsample}, {"seed", seed},   {"workers", workers},
            {"oov_occupies_window", oov_occupies_window}};
  }
};

// Dense |V| x dim table of one slice's center vectors. Row r belongs to
// tokens()[r].
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(std::string slice, std::vector<std::string> tokens, std::size_t dim)
      : slice_(std::move(slice)), tokens_(std::move(tokens)), dim_(dim), values_(tokens_.size() * dim, 0.0f) {
    if (dim == 0) throw DataError("embedding dimension must be positive");
    rebuild_index();
  }

  const std::string& slice() const { return slice_; }
  void set_slice(std::string s) { slice_ = std::move(s); }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const Hyperparameters& hyperparameters() const { return hyper_; }
  void set_hyperparameters(const Hyperparameters& h) { hyper_ = h; }

  std::span<float> row(std::size_t r) { return {values_.data() + r * dim_, dim_}; }
  std::span<const float> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }
  std::vector<float>& values() { return values_; }
  const std::vector<float>& values() const { return values_; }

  std::optional<std::size_t> find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string& token) const {
    auto r = find(token);
    if (!r) throw DataError("token '" + token + "' is not in model " + slice_);
    return *r;
  }

  bool same_vocabulary(const EmbeddingModel& other) const { return tokens_ == other.tokens_; }

  friend bool operator==(const EmbeddingModel& a, const EmbeddingModel& b) {
    return a.tokens_ == b.tokens_ && a.dim_ == b.dim_ && a.values_ == b.values_;
  }

 private:
  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!index_.emplace(tokens_[i], i).second) throw DataError("duplicate token '" + tokens_[i] + "' in model");
    }
  }

  std::string slice_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  Hyperparameters hyper_;
};

// Text format: "<vocab_size> <dim>" header, then "<token> <f1> ... <fdim>" per
// row. Floats are written in shortest round-trip form, so save/load is exact.
inline void save_model(const EmbeddingModel& model, std::ostream& out) {
  out << model.size() << ' ' << model.dim() << '\n';
  char buf[64];
  std::string line;
  for (std::size_t r = 0; r < model.size(); ++r) {
    line = model.tokens()[r];
    for (float v : model.row(r)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      line.push_back(' ');
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out << line;
  }
}

inline void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file " + path.string());
  save_model(model, out);
  if (!out) throw DataError("write failed for " + path.string());
}

inline EmbeddingModel load_model(std::istream& in, std::string slice = {}) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("model file is empty");
  std::istringstream hs(header);
  long long rows = -1;
  long long dim = -1;
  std::string extra;
  if (!(hs >> rows >> dim) || (hs >> extra) || rows < 0 || dim <= 0) {
    throw DataError("malformed model header '" + header + "'");
  }
  std::vector<std::string> tokens;
  std::vector<float> values;
  tokens.reserve(static_cast<std::size_t>(rows));
  values.reserve(static_cast<std::size_t>(rows * dim));
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (static_cast<long long>(tokens.size()) == rows) {
      throw DataError("model has more rows than the header's " + std::to_string(rows));
    }
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) throw DataError("malformed model row at line " + std::to_string(lineno));
    tokens.push_back(line.substr(0, sp));
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    long long fields = 0;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      float v = 0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc{} || (res.ptr != end && *res.ptr != ' ')) {
        throw DataError("bad number in model row at line " + std::to_string(lineno));
      }
      if (!std::isfinite(v)) throw DataError("non-finite value in model row at line " + std::to_string(lineno));
      values.push_back(v);
      p = res.ptr;
      ++fields;
    }
    if (fields != dim) {
      throw DataError("row at line " + std::to_string(lineno) + " has " + std::to_string(fields) +
                      " values, header says " + std::to_string(dim));
    }
  }
  if (static_cast<long long>(tokens.size()) != rows) {
    throw DataError("model header declares " + std::to_string(rows) + " rows but file has " +
                    std::to_string(tokens.size()));
  }
  EmbeddingModel model(std::move(slice), std::move(tokens), static_cast<std::size_t>(dim));
  model.values() = std::move(values);
  return model;
}

inline EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return load_model(in, path.stem().string());
}

}  // namespace emodrift
