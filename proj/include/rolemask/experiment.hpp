#ifndef ROLEMASK_EXPERIMENT_HPP
#define ROLEMASK_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rolemask/eval.hpp"

namespace rolemask {

// Everything one experiment execution needs, loadable from a JSON file so a
// run is a single reviewable document rather than a flag soup.
struct ExperimentSpec {
  std::string dataset_path;
  std::string dataset_name;  // defaults to the file stem
  std::string adapter = "canonical";
  std::string label_map_path;  // optional
  std::vector<Setting> settings;
  std::string backend = "linear";
  TrainConfig config;
  std::size_t n_runs = 1;
  std::uint64_t base_seed = 0;
  std::string embeddings_path;      // optional; empty uses a seeded table
  std::size_t embedding_dim = 64;
  std::string oov_policy = "random";  // "random" | "zero"
  std::uint64_t embedding_seed = 0;
  std::string output_dir = "out";
  std::string absent_policy = "keep";  // "keep" | "drop"
  bool save_checkpoints = false;
  bool stratified_split = false;
  SplitRatios ratios;
};

// Parses the spec document; unknown keys are errors so typos cannot
// silently fall back to defaults. Does not touch the filesystem.
ExperimentSpec spec_from_json(const nlohmann::json& j,
                              const std::string& context);
nlohmann::ordered_json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_experiment_spec(const std::string& path);

// Checks settings (non-empty, as_is present, each valid), enum fields, and
// that every referenced input path exists.
void validate(const ExperimentSpec& spec);

// Executes the spec: ingests, maps labels, runs the experiment, and writes
// into spec.output_dir:
//   manifest.json             spec + resolved seeds + input content hashes
//   results.json, results.tsv
//   runs/runNNN/pred_<setting>.jsonl   one {"id","gold","pred"} per line
//   runs/runNNN/model_<setting>/       checkpoints when save_checkpoints
// On failure a FAILED file with the error message is left next to whatever
// partial outputs exist, and the error propagates.
ResultsTable run_from_spec(const ExperimentSpec& spec);

// Reads a manifest written by run_from_spec, verifies the recorded input
// hashes still match the files on disk (ConfigError otherwise), and returns
// the embedded spec. output_override, when non-empty, redirects the outputs.
ExperimentSpec load_manifest(const std::string& path,
                             const std::string& output_override = "");

// Content hash used in manifests.
std::uint64_t hash_file(const std::string& path);

// Rebuilds a ResultsTable from the results_json export (for report tooling).
ResultsTable results_from_json(const nlohmann::json& j);

}  // namespace rolemask

#endif
