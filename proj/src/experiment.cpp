#include "rolemask/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "rolemask/rng.hpp"

namespace fs = std::filesystem;

namespace rolemask {

namespace {

void check_keys(const nlohmann::json& obj,
                const std::set<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError(context + ": unknown key '" + key + "'");
}

template <typename T>
void read_into(const nlohmann::json& obj, const char* key, T& target,
               const std::string& context) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(context + ": malformed value for '" + key + "'");
  }
}

std::string run_dir_name(std::size_t run) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "run%03zu", run);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::ordered_json input_entry(const std::string& path) {
  return {{"path", path}, {"fnv1a64", hash_hex(hash_file(path))}};
}

}  // namespace

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

ExperimentSpec spec_from_json(const nlohmann::json& j,
                              const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": spec must be an object");
  check_keys(j,
             {"dataset", "settings", "backend", "train", "n_runs", "base_seed",
              "embeddings", "split", "absent_policy", "save_checkpoints",
              "output_dir"},
             context);
  ExperimentSpec spec;

  if (!j.contains("dataset") || !j.at("dataset").is_object())
    throw ConfigError(context + ": missing 'dataset' object");
  const nlohmann::json& dataset = j.at("dataset");
  check_keys(dataset, {"path", "name", "adapter", "label_map"},
             context + ".dataset");
  if (!dataset.contains("path"))
    throw ConfigError(context + ".dataset: missing 'path'");
  read_into(dataset, "path", spec.dataset_path, context + ".dataset");
  read_into(dataset, "name", spec.dataset_name, context + ".dataset");
  read_into(dataset, "adapter", spec.adapter, context + ".dataset");
  read_into(dataset, "label_map", spec.label_map_path, context + ".dataset");
  if (spec.dataset_name.empty())
    spec.dataset_name = fs::path(spec.dataset_path).stem().string();

  if (!j.contains("settings") || !j.at("settings").is_array())
    throw ConfigError(context + ": missing 'settings' array");
  for (const nlohmann::json& entry : j.at("settings")) {
    if (!entry.is_string())
      throw ConfigError(context + ".settings: entries must be setting ids");
    const auto setting = Setting::from_id(entry.get<std::string>());
    if (!setting)
      throw ConfigError(context + ".settings: unknown setting '" +
                        entry.get<std::string>() + "'");
    spec.settings.push_back(*setting);
  }

  read_into(j, "backend", spec.backend, context);
  read_into(j, "n_runs", spec.n_runs, context);
  read_into(j, "base_seed", spec.base_seed, context);
  read_into(j, "absent_policy", spec.absent_policy, context);
  read_into(j, "save_checkpoints", spec.save_checkpoints, context);
  read_into(j, "output_dir", spec.output_dir, context);

  if (j.contains("train")) {
    const nlohmann::json& train = j.at("train");
    const std::string tctx = context + ".train";
    check_keys(train,
               {"dropout", "recurrent_dropout", "learning_rate", "l2",
                "batch_size", "patience", "max_epochs", "hidden_size",
                "fine_tune_embeddings"},
               tctx);
    read_into(train, "dropout", spec.config.dropout, tctx);
    read_into(train, "recurrent_dropout", spec.config.recurrent_dropout, tctx);
    read_into(train, "learning_rate", spec.config.learning_rate, tctx);
    read_into(train, "l2", spec.config.l2, tctx);
    read_into(train, "batch_size", spec.config.batch_size, tctx);
    read_into(train, "patience", spec.config.patience, tctx);
    read_into(train, "max_epochs", spec.config.max_epochs, tctx);
    read_into(train, "hidden_size", spec.config.hidden_size, tctx);
    read_into(train, "fine_tune_embeddings", spec.config.fine_tune_embeddings,
              tctx);
  }

  if (j.contains("embeddings")) {
    const nlohmann::json& emb = j.at("embeddings");
    const std::string ectx = context + ".embeddings";
    check_keys(emb, {"path", "dimension", "oov", "seed"}, ectx);
    read_into(emb, "path", spec.embeddings_path, ectx);
    read_into(emb, "dimension", spec.embedding_dim, ectx);
    read_into(emb, "oov", spec.oov_policy, ectx);
    read_into(emb, "seed", spec.embedding_seed, ectx);
  }

  if (j.contains("split")) {
    const nlohmann::json& split = j.at("split");
    const std::string sctx = context + ".split";
    check_keys(split, {"train", "dev", "test", "stratified"}, sctx);
    read_into(split, "train", spec.ratios.train, sctx);
    read_into(split, "dev", spec.ratios.dev, sctx);
    read_into(split, "test", spec.ratios.test, sctx);
    read_into(split, "stratified", spec.stratified_split, sctx);
  }
  return spec;
}

nlohmann::ordered_json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::ordered_json dataset{{"path", spec.dataset_path},
                                 {"name", spec.dataset_name},
                                 {"adapter", spec.adapter}};
  if (!spec.label_map_path.empty()) dataset["label_map"] = spec.label_map_path;

  nlohmann::ordered_json settings = nlohmann::json::array();
  for (const Setting& setting : spec.settings) settings.push_back(setting.id());

  nlohmann::ordered_json embeddings{{"dimension", spec.embedding_dim},
                                    {"oov", spec.oov_policy},
                                    {"seed", spec.embedding_seed}};
  if (!spec.embeddings_path.empty()) embeddings["path"] = spec.embeddings_path;

  return {{"dataset", dataset},
          {"settings", settings},
          {"backend", spec.backend},
          {"train",
           {{"dropout", spec.config.dropout},
            {"recurrent_dropout", spec.config.recurrent_dropout},
            {"learning_rate", spec.config.learning_rate},
            {"l2", spec.config.l2},
            {"batch_size", spec.config.batch_size},
            {"patience", spec.config.patience},
            {"max_epochs", spec.config.max_epochs},
            {"hidden_size", spec.config.hidden_size},
            {"fine_tune_embeddings", spec.config.fine_tune_embeddings}}},
          {"n_runs", spec.n_runs},
          {"base_seed", spec.base_seed},
          {"embeddings", embeddings},
          {"split",
           {{"train", spec.ratios.train},
            {"dev", spec.ratios.dev},
            {"test", spec.ratios.test},
            {"stratified", spec.stratified_split}}},
          {"absent_policy", spec.absent_policy},
          {"save_checkpoints", spec.save_checkpoints},
          {"output_dir", spec.output_dir}};
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open experiment spec");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return spec_from_json(j, path);
}

void validate(const ExperimentSpec& spec) {
  if (spec.settings.empty())
    throw ConfigError("experiment: settings list is empty");
  for (const Setting& setting : spec.settings) validate(setting);
  const bool has_asis =
      std::any_of(spec.settings.begin(), spec.settings.end(),
                  [](const Setting& s) { return s.kind == SettingKind::as_is; });
  if (!has_asis) throw ConfigError("experiment: settings must include as_is");
  std::set<std::string> ids;
  for (const Setting& setting : spec.settings)
    if (!ids.insert(setting.id()).second)
      throw ConfigError("experiment: duplicate setting '" + setting.id() + "'");

  if (!has_backend(spec.backend))
    throw ConfigError("experiment: unknown backend '" + spec.backend + "'");
  if (spec.n_runs == 0) throw ConfigError("experiment: n_runs must be >= 1");
  if (spec.absent_policy != "keep" && spec.absent_policy != "drop")
    throw ConfigError("experiment: absent_policy must be 'keep' or 'drop'");
  if (spec.oov_policy != "random" && spec.oov_policy != "zero")
    throw ConfigError("experiment: oov must be 'random' or 'zero'");
  if (spec.embedding_dim == 0)
    throw ConfigError("experiment: embedding dimension must be positive");
  validate(spec.config);

  if (!fs::exists(spec.dataset_path))
    throw ConfigError("experiment: dataset path does not exist: " +
                      spec.dataset_path);
  if (!spec.label_map_path.empty() && !fs::exists(spec.label_map_path))
    throw ConfigError("experiment: label map does not exist: " +
                      spec.label_map_path);
  if (!spec.embeddings_path.empty() && !fs::exists(spec.embeddings_path))
    throw ConfigError("experiment: embeddings file does not exist: " +
                      spec.embeddings_path);
}

ResultsTable run_from_spec(const ExperimentSpec& spec) {
  validate(spec);
  fs::create_directories(spec.output_dir);
  const fs::path out(spec.output_dir);
  try {
    Corpus corpus = load_corpus(spec.dataset_path, spec.adapter, {});
    corpus.name = spec.dataset_name;
    if (!spec.label_map_path.empty()) {
      const LabelMap map = LabelMap::load(spec.label_map_path);
      MapReport report;
      corpus = map_labels(corpus, map, &report);
      if (report.dropped > 0)
        std::cerr << "note: label map dropped " << report.dropped
                  << " instances\n";
    }
    FilterReport filter_report;
    corpus = filter_single_label(corpus, &filter_report);
    if (filter_report.removed > 0)
      std::cerr << "note: removed " << filter_report.removed
                << " multi-label instances\n";

    const OovPolicy oov = spec.oov_policy == "zero" ? OovPolicy::zero
                                                    : OovPolicy::random_seeded;
    EmbeddingTable embeddings =
        spec.embeddings_path.empty()
            ? EmbeddingTable(spec.embedding_dim, oov, spec.embedding_seed)
            : load_embeddings(spec.embeddings_path, spec.embedding_dim, oov,
                              spec.embedding_seed);

    nlohmann::ordered_json manifest{
        {"spec", spec_to_json(spec)},
        {"seeds", nlohmann::json::array()},
        {"inputs",
         {{"dataset", input_entry(spec.dataset_path)},
          {"label_map", spec.label_map_path.empty()
                            ? nlohmann::ordered_json(nullptr)
                            : input_entry(spec.label_map_path)},
          {"embeddings", spec.embeddings_path.empty()
                             ? nlohmann::ordered_json(nullptr)
                             : input_entry(spec.embeddings_path)}}}};
    for (std::size_t k = 0; k < spec.n_runs; ++k)
      manifest["seeds"].push_back(spec.base_seed + k);
    std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";

    ExperimentOptions options;
    options.absent_policy = spec.absent_policy == "drop" ? AbsentPolicy::drop
                                                         : AbsentPolicy::keep;
    options.ratios = spec.ratios;
    options.stratified_split = spec.stratified_split;
    if (spec.save_checkpoints)
      options.model_observer = [&](std::size_t run, const Setting& setting,
                                   const ClassifierModel& model) {
        const fs::path dir =
            out / "runs" / run_dir_name(run) / ("model_" + setting.id());
        model.save(dir.string());
      };

    const RunObserver observer = [&](const RunRecord& record) {
      const fs::path dir = out / "runs" / run_dir_name(record.run);
      fs::create_directories(dir);
      std::ofstream pred_out(dir / ("pred_" + record.setting.id() + ".jsonl"));
      for (std::size_t i = 0; i < record.ids.size(); ++i) {
        nlohmann::ordered_json line{{"id", record.ids[i]},
                                    {"gold", record.gold[i]},
                                    {"pred", record.pred[i]}};
        pred_out << line.dump() << "\n";
      }
    };

    ResultsTable table =
        run_experiment(corpus, spec.settings, spec.backend, spec.config,
                       spec.n_runs, spec.base_seed, embeddings, options,
                       observer);
    std::ofstream(out / "results.json") << results_json(table).dump(2) << "\n";
    std::ofstream(out / "results.tsv") << results_tsv(table);
    return table;
  } catch (const std::exception& e) {
    std::ofstream(out / "FAILED") << e.what() << "\n";
    throw;
  }
}

ExperimentSpec load_manifest(const std::string& path,
                             const std::string& output_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open manifest");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.contains("spec"))
    throw ConfigError(path + ": manifest has no 'spec' object");
  ExperimentSpec spec = spec_from_json(j.at("spec"), path + ":spec");

  if (j.contains("inputs")) {
    auto verify = [&](const char* key, const std::string& expected_path) {
      const nlohmann::json& entry = j.at("inputs").at(key);
      if (entry.is_null()) return;
      const auto recorded = entry.at("fnv1a64").get<std::string>();
      const std::string actual = hash_hex(hash_file(expected_path));
      if (recorded != actual)
        throw ConfigError(path + ": input '" + expected_path +
                          "' no longer matches the manifest hash (" + actual +
                          " vs " + recorded + ")");
    };
    if (!spec.dataset_path.empty()) verify("dataset", spec.dataset_path);
    if (!spec.label_map_path.empty()) verify("label_map", spec.label_map_path);
    if (!spec.embeddings_path.empty()) verify("embeddings", spec.embeddings_path);
  }
  if (!output_override.empty()) spec.output_dir = output_override;
  return spec;
}

ResultsTable results_from_json(const nlohmann::json& j) {
  ResultsTable table;
  auto scores_from = [](const nlohmann::json& s) {
    MacroScores scores;
    scores.precision = s.at("precision").get<double>();
    scores.recall = s.at("recall").get<double>();
    scores.f1 = s.at("f1").get<double>();
    for (const auto& [label, prf] : s.at("per_label").items())
      scores.per_label[label] = {prf.at("precision").get<double>(),
                                 prf.at("recall").get<double>(),
                                 prf.at("f1").get<double>()};
    return scores;
  };
  try {
    for (const nlohmann::json& row_json : j.at("rows")) {
      ResultRow row;
      row.dataset = row_json.at("dataset").get<std::string>();
      const auto setting =
          Setting::from_id(row_json.at("setting").get<std::string>());
      if (!setting)
        throw ConfigError("results: unknown setting '" +
                          row_json.at("setting").get<std::string>() + "'");
      row.setting = *setting;
      for (const nlohmann::json& run : row_json.at("runs"))
        row.runs.push_back(scores_from(run));
      table.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("results: ") + e.what());
  }
  finalize(table);
  return table;
}

}  // namespace rolemask
