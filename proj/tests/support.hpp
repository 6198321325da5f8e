#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "emodrift/embedding.hpp"
#include "emodrift/random.hpp"
#include "oracles.hpp"

namespace support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("emodrift_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline emodrift::EmbeddingModel make_model(const oracle::Matrix& vecs, std::string slice = "m") {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < vecs.size(); ++i) tokens.push_back("tok" + std::to_string(i));
  emodrift::EmbeddingModel m(std::move(slice), tokens, vecs.front().size());
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t k = 0; k < vecs[i].size(); ++k) m.row(i)[k] = static_cast<float>(vecs[i][k]);
  return m;
}

// Model rows widened back to double, exactly as the library sees them.
inline oracle::Matrix rows(const emodrift::EmbeddingModel& m) {
  oracle::Matrix out(m.size(), std::vector<double>(m.dim()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t k = 0; k < m.dim(); ++k) out[i][k] = m.row(i)[k];
  return out;
}

inline oracle::Matrix random_vectors(std::size_t n, std::size_t d, std::uint64_t seed) {
  emodrift::Rng rng(seed);
  oracle::Matrix v(n, std::vector<double>(d));
  for (auto& r : v)
    for (auto& x : r) x = static_cast<float>(rng.normal());  // float-representable
  return v;
}

// Tokens "a" and "b" occur with the same context pool, "c" with a disjoint
// one; "a" and "b" never share a document.
inline std::vector<std::vector<std::string>> identical_context_corpus(std::uint64_t seed, std::size_t docs = 3000) {
  emodrift::Rng rng(seed);
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < docs; ++i) {
    const auto pick = rng.below(3);
    const std::string head = pick == 0 ? "a" : pick == 1 ? "b" : "c";
    const std::string pool = pick == 2 ? "y" : "x";
    std::vector<std::string> doc;
    const std::size_t pos = rng.below(5);
    for (std::size_t k = 0; k < 5; ++k) {
      if (k == pos) doc.push_back(head);
      doc.push_back(pool + std::to_string(rng.below(10)));
    }
    out.push_back(std::move(doc));
  }
  return out;
}

}  // namespace support
