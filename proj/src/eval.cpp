#include "rolemask/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rolemask/kernels.hpp"

namespace rolemask {

const ResultRow* ResultsTable::find(const std::string& dataset,
                                    const Setting& setting) const {
  for (const ResultRow& row : rows)
    if (row.dataset == dataset && row.setting == setting) return &row;
  return nullptr;
}

const ResultRow& ResultsTable::at(const std::string& dataset,
                                  const Setting& setting) const {
  const ResultRow* row = find(dataset, setting);
  if (!row)
    throw ConfigError("no result row for dataset '" + dataset + "', setting '" +
                      setting.id() + "'");
  return *row;
}

namespace {

MacroScores mean_scores(const std::vector<MacroScores>& runs) {
  MacroScores mean;
  if (runs.empty()) return mean;
  const double inv = 1.0 / static_cast<double>(runs.size());
  for (const MacroScores& run : runs) {
    mean.precision += run.precision;
    mean.recall += run.recall;
    mean.f1 += run.f1;
    for (const auto& [label, prf] : run.per_label) {
      PRF& acc = mean.per_label[label];
      acc.precision += prf.precision;
      acc.recall += prf.recall;
      acc.f1 += prf.f1;
    }
  }
  mean.precision *= inv;
  mean.recall *= inv;
  mean.f1 *= inv;
  for (auto& [label, prf] : mean.per_label) {
    prf.precision *= inv;
    prf.recall *= inv;
    prf.f1 *= inv;
  }
  return mean;
}

}  // namespace

void finalize(ResultsTable& table) {
  for (ResultRow& row : table.rows) row.mean = mean_scores(row.runs);
  for (ResultRow& row : table.rows) {
    row.above_asis_precision = false;
    row.above_asis_recall = false;
    row.above_asis_f1 = false;
    if (row.setting.kind == SettingKind::as_is) continue;
    const ResultRow* asis = table.find(row.dataset, Setting::as_is());
    if (!asis) continue;
    row.above_asis_precision = row.mean.precision > asis->mean.precision;
    row.above_asis_recall = row.mean.recall > asis->mean.recall;
    row.above_asis_f1 = row.mean.f1 > asis->mean.f1;
  }
}

namespace {

[[noreturn]] void rethrow_with_context(const std::exception& e, std::size_t run,
                                       const Setting& setting) {
  const std::string message =
      "run " + std::to_string(run) + ", setting " + setting.id() + ": " +
      e.what();
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(message);
  if (dynamic_cast<const CorpusError*>(&e)) throw CorpusError(message);
  throw std::runtime_error(message);
}

}  // namespace

ResultsTable run_experiment(const Corpus& corpus,
                            const std::vector<Setting>& settings,
                            const std::string& backend,
                            const TrainConfig& config, std::size_t n_runs,
                            std::uint64_t base_seed,
                            const EmbeddingTable& embeddings,
                            const ExperimentOptions& options,
                            const RunObserver& observer) {
  if (settings.empty()) throw ConfigError("settings list is empty");
  for (const Setting& setting : settings) validate(setting);
  const bool has_asis = std::any_of(
      settings.begin(), settings.end(),
      [](const Setting& s) { return s.kind == SettingKind::as_is; });
  if (!has_asis)
    throw ConfigError("settings must include as_is for comparison flags");
  if (n_runs == 0) throw ConfigError("n_runs must be at least 1");
  validate(config);

  // The embedding cache materializes OOV vectors on first lookup; touch
  // every token the runs can see while still single-threaded so the table
  // is read-only inside the parallel region.
  for (const AnnotatedInstance& inst : corpus.instances)
    for (const std::string& token : inst.tokens) embeddings.lookup(token);
  for (const std::string& token :
       {options.specials.mask, options.specials.open, options.specials.close})
    embeddings.lookup(token);

  // scores[k * settings.size() + s]
  std::vector<MacroScores> scores(n_runs * settings.size());
  std::vector<RunRecord> records;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  const long runs = static_cast<long>(n_runs);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) \
    num_threads(std::min<int>(kernels::max_threads(), static_cast<int>(n_runs))) \
    if (n_runs > 1 && kernels::max_threads() > 1)
#endif
  for (long k = 0; k < runs; ++k) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      auto [train_part, dev_part, test_part] =
          split(corpus, options.ratios, base_seed + static_cast<std::uint64_t>(k),
                options.stratified_split);
      for (std::size_t s = 0; s < settings.size(); ++s) {
        const Setting& setting = settings[s];
        try {
          const auto t_train = transform_corpus(train_part, setting,
                                                options.specials,
                                                options.absent_policy);
          const auto t_dev = transform_corpus(dev_part, setting,
                                              options.specials,
                                              options.absent_policy);
          const auto t_test = transform_corpus(test_part, setting,
                                               options.specials,
                                               options.absent_policy);
          TrainConfig run_config = config;
          run_config.seed = base_seed + static_cast<std::uint64_t>(k);
          const auto model = train(backend, t_train, t_dev, embeddings,
                                   run_config, corpus.label_set);
          const std::vector<std::string> pred = model->predict(t_test);
          RunRecord record;
          record.run = static_cast<std::size_t>(k);
          record.setting = setting;
          for (const TransformedInstance& inst : t_test) {
            record.ids.push_back(inst.source_id);
            record.gold.push_back(inst.label);
          }
          record.pred = pred;
          scores[static_cast<std::size_t>(k) * settings.size() + s] =
              macro_prf(confusion(record.gold, pred, corpus.label_set));
          if (options.model_observer) {
#ifdef _OPENMP
#pragma omp critical(rolemask_model_observer)
#endif
            options.model_observer(static_cast<std::size_t>(k), setting, *model);
          }
          if (observer) {
#ifdef _OPENMP
#pragma omp critical(rolemask_run_observer)
#endif
            records.push_back(std::move(record));
          }
        } catch (const std::exception& e) {
          rethrow_with_context(e, static_cast<std::size_t>(k), setting);
        }
      }
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(rolemask_run_failure)
#endif
      {
        if (!failure) failure = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Observers see records in (run, setting) order regardless of the
  // parallel schedule.
  if (observer) {
    std::sort(records.begin(), records.end(),
              [&](const RunRecord& a, const RunRecord& b) {
                if (a.run != b.run) return a.run < b.run;
                return a.setting < b.setting;
              });
    for (const RunRecord& record : records) observer(record);
  }

  ResultsTable table;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    ResultRow row;
    row.dataset = corpus.name;
    row.setting = settings[s];
    for (std::size_t k = 0; k < n_runs; ++k)
      row.runs.push_back(scores[k * settings.size() + s]);
    table.rows.push_back(std::move(row));
  }
  finalize(table);
  return table;
}

std::vector<PerEmotionRow> per_emotion_report(const ResultsTable& table,
                                              const std::string& dataset,
                                              const Setting& setting) {
  const ResultRow& row = table.at(dataset, setting);
  std::vector<PerEmotionRow> report;
  for (const auto& [label, prf] : row.mean.per_label)
    report.push_back({label, prf});
  return report;  // map iteration is already label-sorted
}

nlohmann::ordered_json results_json(const ResultsTable& table) {
  auto scores_json = [](const MacroScores& s) {
    nlohmann::ordered_json per_label(nlohmann::json::value_t::object);
    for (const auto& [label, prf] : s.per_label)
      per_label[label] = {{"precision", prf.precision},
                          {"recall", prf.recall},
                          {"f1", prf.f1}};
    return nlohmann::ordered_json{{"precision", s.precision},
                                  {"recall", s.recall},
                                  {"f1", s.f1},
                                  {"per_label", per_label}};
  };
  nlohmann::ordered_json rows = nlohmann::json::array();
  for (const ResultRow& row : table.rows) {
    nlohmann::ordered_json runs = nlohmann::json::array();
    for (const MacroScores& run : row.runs) runs.push_back(scores_json(run));
    rows.push_back(
        {{"dataset", row.dataset},
         {"setting", row.setting.id()},
         {"runs", runs},
         {"mean", scores_json(row.mean)},
         {"above_asis",
          {{"precision", row.above_asis_precision},
           {"recall", row.above_asis_recall},
           {"f1", row.above_asis_f1}}}});
  }
  return {{"rows", rows}};
}

namespace {

int pct(double fraction) {
  return static_cast<int>(std::lround(fraction * 100.0));
}

}  // namespace

std::string results_tsv(const ResultsTable& table) {
  // Which non-as_is kinds appear at all determines the column blocks.
  std::vector<SettingKind> kinds;
  for (SettingKind kind :
       {SettingKind::without, SettingKind::only, SettingKind::position})
    for (const ResultRow& row : table.rows)
      if (row.setting.kind == kind) {
        kinds.push_back(kind);
        break;
      }

  std::ostringstream out;
  out << "dataset\trole\tas_is_p\tas_is_r\tas_is_f1";
  for (SettingKind kind : kinds) {
    const std::string& name = setting_kind_name(kind);
    out << '\t' << name << "_p\t" << name << "_r\t" << name << "_f1\t" << name
        << "_above_asis";
  }
  out << '\n';

  // Row per (dataset, role), datasets in first-appearance order.
  std::vector<std::string> datasets;
  for (const ResultRow& row : table.rows)
    if (std::find(datasets.begin(), datasets.end(), row.dataset) ==
        datasets.end())
      datasets.push_back(row.dataset);

  for (const std::string& dataset : datasets) {
    const ResultRow* asis = table.find(dataset, Setting::as_is());
    std::vector<RoleKind> roles;
    for (RoleKind role : kAllRoles)
      for (const ResultRow& row : table.rows)
        if (row.dataset == dataset && row.setting.role == role) {
          roles.push_back(role);
          break;
        }

    auto emit_asis = [&](std::ostream& line) {
      if (asis)
        line << pct(asis->mean.precision) << '\t' << pct(asis->mean.recall)
             << '\t' << pct(asis->mean.f1);
      else
        line << "—\t—\t—";
    };

    if (roles.empty()) {
      out << dataset << "\t—\t";
      emit_asis(out);
      for (std::size_t i = 0; i < kinds.size(); ++i) out << "\t—\t—\t—\t—";
      out << '\n';
      continue;
    }
    for (RoleKind role : roles) {
      out << dataset << '\t' << role_name(role) << '\t';
      emit_asis(out);
      for (SettingKind kind : kinds) {
        const ResultRow* row = table.find(dataset, Setting{kind, role});
        if (row)
          out << '\t' << pct(row->mean.precision) << '\t'
              << pct(row->mean.recall) << '\t' << pct(row->mean.f1) << '\t'
              << (row->above_asis_f1 ? 1 : 0);
        else
          out << "\t—\t—\t—\t—";
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace rolemask
