#ifndef ROLEMASK_CORPUS_HPP
#define ROLEMASK_CORPUS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "rolemask/types.hpp"

namespace rolemask {

// Whitespace-plus-punctuation tokenizer. Sentence-final and clause
// punctuation is peeled off token edges into tokens of its own; interior
// punctuation ("U.S.", "don't") stays attached. char_starts/char_ends give
// the source offsets of each token for span projection.
struct Tokenized {
  std::vector<std::string> tokens;
  std::vector<std::size_t> char_starts;
  std::vector<std::size_t> char_ends;
};
Tokenized tokenize(const std::string& text);
Tokenized tokenize_whitespace(const std::string& text);
std::vector<std::string> whitespace_tokens(const std::string& text);

// Maps a character range onto the minimal covering token range.
// Returns false when the range touches no token.
bool project_char_span(const Tokenized& tok, std::size_t cbegin,
                       std::size_t cend, Span& out);

struct AdapterOptions {
  // Adapter-specific knobs; keys an adapter does not know are ignored.
  std::map<std::string, std::string> values;

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }
};

// adapter is one of: canonical-jsonl, es, et, gne, reman, eca.
// See docs/adapters.md for the expected file layouts.
Corpus load_corpus(const std::string& path, const std::string& adapter,
                   const AdapterOptions& options = {});

// Canonical JSONL: {"id": ..., "tokens": [...], "label": ..., "roles": {...}}
Corpus load_canonical(const std::string& path, const std::string& name = "");
void save_canonical(const Corpus& corpus, const std::string& path);

struct MapReport {
  std::size_t dropped = 0;
};
Corpus map_labels(const Corpus& corpus, const LabelMap& map,
                  MapReport* report = nullptr);

struct FilterReport {
  std::size_t removed = 0;
};
Corpus filter_single_label(const Corpus& corpus, FilterReport* report = nullptr);

CorpusStats compute_stats(const Corpus& corpus);

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

// Deterministic shuffle split. Dev and test get floor(n * ratio) instances,
// the remainder goes to train. Throws on fewer than 3 instances or ratios
// that do not sum to 1. stratified shuffles and splits within each label.
std::tuple<Corpus, Corpus, Corpus> split(const Corpus& corpus,
                                         const SplitRatios& ratios,
                                         std::uint64_t seed,
                                         bool stratified = false);

}  // namespace rolemask

#endif
