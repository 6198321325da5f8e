#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "emodrift/corpus.hpp"
#include "emodrift/embedding.hpp"
#include "emodrift/error.hpp"
#include "emodrift/skipgram.hpp"
#include "emodrift/vocabulary.hpp"

namespace emodrift {

// Slice names of a slice directory in chronological order: manifest.json when
// present, otherwise every *.txt file.
inline std::vector<std::string> list_slices(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  const auto manifest = dir / "manifest.json";
  if (std::filesystem::exists(manifest)) {
    std::ifstream in(manifest);
    try {
      const auto j = nlohmann::json::parse(in);
      for (const auto& [name, _] : j.at("slices").items()) names.push_back(name);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed slice manifest " + manifest.string() + ": " + e.what());
    }
  } else if (std::filesystem::is_directory(dir)) {
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.path().extension() == ".txt") names.push_back(e.path().stem().string());
    }
  } else {
    throw DataError("slice directory " + dir.string() + " does not exist");
  }
  std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
    try {
      return SliceKey::parse(a) < SliceKey::parse(b);
    } catch (const ConfigError&) {
      return a < b;
    }
  });
  if (names.empty()) throw DataError("no slices found in " + dir.string());
  return names;
}

struct TrainedSlices {
  SharedVocabulary vocab;
  std::vector<EmbeddingModel> models;
  std::vector<TrainingStats> stats;
};

// Counts every slice, builds the intersection vocabulary, then trains one
// model per slice. `slice_workers` slices train concurrently; the hyperparameter
// worker count applies inside each slice.
inline TrainedSlices train_slices(const std::filesystem::path& dir, const std::vector<std::string>& names,
                                  std::uint64_t min_count, const Hyperparameters& hp, std::size_t slice_workers = 1) {
  hp.validate();
  std::vector<SliceFrequencies> freqs;
  for (const auto& n : names) freqs.push_back(count_tokens(n, read_slice_documents(dir / (n + ".txt"))));
  TrainedSlices out;
  out.vocab = build_vocab(freqs, min_count);
  freqs.clear();
  out.models.resize(names.size());
  out.stats.resize(names.size());
  const auto train_one = [&](std::size_t i) {
    const auto corpus = encode_corpus(read_slice_documents(dir / (names[i] + ".txt")), out.vocab, hp.oov_occupies_window);
    out.models[i] = train_skipgram(corpus, out.vocab, hp, names[i], &out.stats[i]);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(slice_workers, names.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < names.size(); ++i) train_one(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < names.size(); i += workers) train_one(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace emodrift
