#ifndef ROLEMASK_EVAL_HPP
#define ROLEMASK_EVAL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rolemask/corpus.hpp"
#include "rolemask/metrics.hpp"
#include "rolemask/model.hpp"
#include "rolemask/transform.hpp"

namespace rolemask {

// One (dataset, setting) cell of the experiment grid. `runs` holds the
// scores of every run; `mean` and the flags are filled in by finalize.
struct ResultRow {
  std::string dataset;
  Setting setting;
  std::vector<MacroScores> runs;
  MacroScores mean;
  bool above_asis_precision = false;
  bool above_asis_recall = false;
  bool above_asis_f1 = false;
};

struct ResultsTable {
  std::vector<ResultRow> rows;

  const ResultRow* find(const std::string& dataset, const Setting& setting) const;
  // Throws ConfigError when the row is missing.
  const ResultRow& at(const std::string& dataset, const Setting& setting) const;
};

// Recomputes every row's mean scores and the above-As-Is flags. A flag is
// true iff the row's mean strictly exceeds the same dataset's As-Is mean;
// the As-Is row itself always carries false flags.
void finalize(ResultsTable& table);

// Everything about an experiment that is not the corpus, the settings, or
// the training configuration.
struct ExperimentOptions {
  SpecialTokens specials;
  AbsentPolicy absent_policy = AbsentPolicy::keep;
  SplitRatios ratios;
  bool stratified_split = false;
  // Offered each trained model right after its test predictions are scored
  // (e.g. for checkpointing); serialized across concurrent runs.
  std::function<void(std::size_t run, const Setting&, const ClassifierModel&)>
      model_observer;
};

// Raw predictions of one (run, setting) execution, offered to the observer
// right after scoring so callers can persist per-run prediction files.
struct RunRecord {
  std::size_t run = 0;
  Setting setting;
  std::vector<std::string> ids;
  std::vector<std::string> gold;
  std::vector<std::string> pred;
};
using RunObserver = std::function<void(const RunRecord&)>;

// The multi-seed runner: for run k the corpus is split with seed
// base_seed + k and that one split is shared by every setting, so settings
// are compared on identical partitions; the model seed is base_seed + k as
// well. Settings must include As-Is (the comparison flags need it).
ResultsTable run_experiment(const Corpus& corpus,
                            const std::vector<Setting>& settings,
                            const std::string& backend,
                            const TrainConfig& config, std::size_t n_runs,
                            std::uint64_t base_seed,
                            const EmbeddingTable& embeddings,
                            const ExperimentOptions& options = {},
                            const RunObserver& observer = {});

// Per-label scores averaged over runs for one row, sorted by label.
struct PerEmotionRow {
  std::string label;
  PRF scores;
};
std::vector<PerEmotionRow> per_emotion_report(const ResultsTable& table,
                                              const std::string& dataset,
                                              const Setting& setting);

// Full per-run export.
nlohmann::ordered_json results_json(const ResultsTable& table);
// Score-matrix layout: one line per (dataset, role), a P/R/F1 block per
// setting kind, scores x100 rounded to integers, and a flag column marking
// means above the dataset's As-Is.
std::string results_tsv(const ResultsTable& table);

}  // namespace rolemask

#endif
