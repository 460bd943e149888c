#include "rolemask/embeddings.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rolemask/rng.hpp"
#include "rolemask/types.hpp"

namespace rolemask {

EmbeddingTable::EmbeddingTable(std::size_t dimension, OovPolicy oov,
                               std::uint64_t seed)
    : dimension_(dimension), oov_(oov), seed_(seed) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
  if (vec.size() != dimension_)
    throw ConfigError("embedding for '" + word + "' has dimension " +
                      std::to_string(vec.size()) + ", expected " +
                      std::to_string(dimension_));
  vectors_[word] = std::move(vec);
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& word) const {
  auto it = vectors_.find(word);
  if (it != vectors_.end()) return it->second;
  std::vector<double> vec(dimension_, 0.0);
  if (oov_ == OovPolicy::random_seeded) {
    Rng rng(fnv1a64(word) ^ seed_);
    // Scale matches typical pretrained vector magnitudes per component.
    for (double& v : vec) v = 0.1 * rng.normal();
  }
  return vectors_.emplace(word, std::move(vec)).first->second;
}

EmbeddingTable load_embeddings(const std::string& path, std::size_t dimension,
                               OovPolicy oov, std::uint64_t seed,
                               EmbeddingLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embeddings file: " + path);
  EmbeddingTable table(dimension, oov, seed);
  std::string line;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vec;
    vec.reserve(dimension);
    double v;
    while (ls >> v) vec.push_back(v);
    if (word.empty() || vec.size() != dimension) {
      ++skipped;
      continue;
    }
    table.insert(word, std::move(vec));
  }
  if (table.size() == 0)
    throw ConfigError("no valid " + std::to_string(dimension) +
                      "-dimensional vectors in " + path);
  if (report) {
    report->loaded = table.size();
    report->skipped = skipped;
  }
  return table;
}

}  // namespace rolemask
