#ifndef ROLEMASK_EMBEDDINGS_HPP
#define ROLEMASK_EMBEDDINGS_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace rolemask {

enum class OovPolicy { zero, random_seeded };

// Word vector table. Lookup is total: words missing from the file resolve
// through the OOV policy, either to the zero vector or to a vector derived
// deterministically from a hash of the word and the table seed.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dimension, OovPolicy oov, std::uint64_t seed = 0);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  OovPolicy oov_policy() const { return oov_; }
  std::uint64_t seed() const { return seed_; }

  void insert(const std::string& word, std::vector<double> vec);
  bool contains(const std::string& word) const {
    return vectors_.count(word) > 0;
  }

  // Returns the word vector, materializing an OOV vector if needed.
  // The same word always yields the same vector.
  const std::vector<double>& lookup(const std::string& word) const;

 private:
  std::size_t dimension_;
  OovPolicy oov_;
  std::uint64_t seed_;
  mutable std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct EmbeddingLoadReport {
  std::size_t loaded = 0;
  std::size_t skipped = 0;  // malformed or wrong-dimension lines
};

// Plain text format, one "word v1 ... vD" per line. Malformed lines are
// skipped and counted; a file with no valid line is an error.
EmbeddingTable load_embeddings(const std::string& path, std::size_t dimension,
                               OovPolicy oov, std::uint64_t seed = 0,
                               EmbeddingLoadReport* report = nullptr);

}  // namespace rolemask

#endif
