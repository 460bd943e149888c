// Command-line front end: wires the corpus adapters, transformations,
// backends, and analyses into reproducible pipelines.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rolemask/analysis.hpp"
#include "rolemask/corpus.hpp"
#include "rolemask/experiment.hpp"
#include "rolemask/kernels.hpp"
#include "rolemask/synth.hpp"

namespace fs = std::filesystem;
using namespace rolemask;

namespace {

RoleKind parse_role(const std::string& name) {
  const auto role = role_from_name(name);
  if (!role) throw ConfigError("unknown role '" + name + "'");
  return *role;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// --- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::string source, adapter, out, label_map, name;
  std::vector<std::string> adapter_opts;
  bool keep_multi = false;
};

void cmd_ingest(const IngestArgs& args) {
  AdapterOptions options;
  for (const std::string& opt : args.adapter_opts) {
    const auto eq = opt.find('=');
    if (eq == std::string::npos)
      throw ConfigError("adapter option '" + opt + "' is not key=value");
    options.values[opt.substr(0, eq)] = opt.substr(eq + 1);
  }
  Corpus corpus = load_corpus(args.source, args.adapter, options);
  if (!args.name.empty()) corpus.name = args.name;

  if (!args.label_map.empty()) {
    MapReport report;
    corpus = map_labels(corpus, LabelMap::load(args.label_map), &report);
    if (report.dropped > 0)
      std::cout << "label map dropped " << report.dropped << " instances\n";
  }
  if (!args.keep_multi) {
    FilterReport report;
    corpus = filter_single_label(corpus, &report);
    std::cout << "dropped " << report.removed << " multi-label instances\n";
  }
  save_canonical(corpus, args.out);
  std::cout << "wrote " << corpus.instances.size() << " instances ("
            << corpus.label_set.size() << " labels) to " << args.out << "\n";
}

// --- stats ----------------------------------------------------------------

void cmd_stats(const std::string& path) {
  const Corpus corpus = load_canonical(path);
  if (corpus.instances.empty())
    std::cerr << "warning: corpus is empty\n";
  const CorpusStats stats = compute_stats(corpus);

  std::printf("# instances   %zu\n", stats.instance_count);
  std::printf("mean length   %.2f\n\n", stats.mean_instance_length);
  std::printf("%-12s  %6s  %s\n", "role", "#", "mean length");
  for (RoleKind role : kAllRoles) {
    const auto it = stats.roles.find(role);
    if (it == stats.roles.end())
      std::printf("%-12s  %6s  %s\n", role_name(role).c_str(), "—", "—");
    else
      std::printf("%-12s  %6zu  %.2f\n", role_name(role).c_str(),
                  it->second.instances_with_role,
                  it->second.mean_filler_length);
  }
}

// --- split ----------------------------------------------------------------

struct SplitArgs {
  std::string in, out_dir, ratios = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
  bool stratified = false;
};

void cmd_split(const SplitArgs& args) {
  const Corpus corpus = load_canonical(args.in);
  const std::vector<std::string> parts = split_csv(args.ratios);
  if (parts.size() != 3)
    throw ConfigError("--ratios needs three comma-separated numbers");
  SplitRatios ratios{std::stod(parts[0]), std::stod(parts[1]),
                     std::stod(parts[2])};
  auto [train, dev, test] = split(corpus, ratios, args.seed, args.stratified);
  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  save_canonical(train, (dir / "train.jsonl").string());
  save_canonical(dev, (dir / "dev.jsonl").string());
  save_canonical(test, (dir / "test.jsonl").string());
  std::cout << "train " << train.instances.size() << ", dev "
            << dev.instances.size() << ", test " << test.instances.size()
            << " -> " << args.out_dir << "\n";
}

// --- run ------------------------------------------------------------------

struct RunArgs {
  std::string spec_path, manifest_path, out;
  std::int64_t seed = -1;
  std::int64_t runs = -1;
  std::string backend;
};

void cmd_run(const RunArgs& args) {
  ExperimentSpec spec =
      !args.manifest_path.empty()
          ? load_manifest(args.manifest_path, args.out)
          : load_experiment_spec(args.spec_path);
  if (args.manifest_path.empty() && !args.out.empty()) spec.output_dir = args.out;
  if (args.seed >= 0) spec.base_seed = static_cast<std::uint64_t>(args.seed);
  if (args.runs > 0) spec.n_runs = static_cast<std::size_t>(args.runs);
  if (!args.backend.empty()) spec.backend = args.backend;

  const ResultsTable table = run_from_spec(spec);
  std::cout << "results in " << spec.output_dir << "\n";
  for (const ResultRow& row : table.rows)
    std::printf("%-22s  F1 %.3f%s\n", row.setting.id().c_str(), row.mean.f1,
                row.above_asis_f1 ? "  (above as_is)" : "");
}

// --- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string out, labels = "anger,fear,joy,sadness", role = "cue",
              confound;
  std::size_t n = 1000;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> vocab;
};

void cmd_synth(const SynthArgs& args) {
  SynthSpec spec;
  spec.n_instances = args.n;
  spec.labels = split_csv(args.labels);
  spec.informative_role = parse_role(args.role);
  spec.noise = args.noise;
  spec.seed = args.seed;
  if (!args.confound.empty()) spec.confound_role = parse_role(args.confound);
  for (const std::string& entry : args.vocab) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--vocab expects role=size, got '" + entry + "'");
    spec.vocab_sizes[parse_role(entry.substr(0, eq))] =
        std::stoul(entry.substr(eq + 1));
  }
  SynthReport report;
  const Corpus corpus = generate_synthetic(spec, &report);
  save_canonical(corpus, args.out);
  std::cout << "wrote " << corpus.instances.size() << " instances to "
            << args.out << " (" << report.flipped_ids.size()
            << " labels flipped by noise)\n";
}

// --- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string in, out_dir = ".", stoplist_path, token, emotions, pred_dir;
  std::string role;
  std::size_t top = 10;
  bool no_fold = false;
  bool disagreements = false;
};

std::map<std::string, std::string> read_pred_file(const fs::path& path,
                                                  const char* field,
                                                  const std::string& setting) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("missing predictions for setting '" + setting +
                      "': " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      out[j.at("id").get<std::string>()] = j.at(field).get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

void cmd_analyze(const AnalyzeArgs& args) {
  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  const bool fold = !args.no_fold;
  bool did_anything = false;

  if (!args.role.empty()) {
    if (args.in.empty()) throw ConfigError("--role requires --in");
    const Corpus corpus = load_canonical(args.in);
    std::set<std::string> stoplist;
    if (!args.stoplist_path.empty()) {
      std::ifstream stop(args.stoplist_path);
      if (!stop)
        throw ConfigError(args.stoplist_path + ": cannot open stoplist");
      std::string word;
      while (stop >> word) stoplist.insert(word);
    }
    const RoleKind role = parse_role(args.role);
    const TokenFrequency freq =
        top_role_tokens(corpus, role, args.top, fold, stoplist);
    const std::string tsv = frequency_tsv(freq);
    std::cout << tsv;
    std::ofstream(out_dir / ("freq_" + role_name(role) + ".tsv")) << tsv;
    std::ofstream(out_dir / ("freq_" + role_name(role) + ".json"))
        << frequency_json(freq).dump(2) << "\n";
    did_anything = true;
  }

  if (!args.token.empty()) {
    if (args.in.empty()) throw ConfigError("--token requires --in");
    const Corpus corpus = load_canonical(args.in);
    const std::vector<std::string> emotions =
        args.emotions.empty() ? corpus.label_set : split_csv(args.emotions);
    std::vector<EmotionDistribution> dists;
    for (const std::string& token : split_csv(args.token))
      dists.push_back(emotion_distribution(corpus, token, emotions, fold));
    for (const EmotionDistribution& dist : dists) {
      const std::string tsv = distribution_tsv(dist, emotions);
      std::cout << tsv;
      std::ofstream(out_dir / ("dist_" + dist.token + ".tsv")) << tsv;
      std::ofstream(out_dir / ("dist_" + dist.token + ".json"))
          << distribution_json(dist).dump(2) << "\n";
    }
    write_distribution_svg(dists, emotions, (out_dir / "dist.svg").string());
    did_anything = true;
  }

  if (args.disagreements) {
    if (args.pred_dir.empty())
      throw ConfigError("--disagreements requires --pred-dir");
    const fs::path pred_dir(args.pred_dir);
    const auto gold =
        read_pred_file(pred_dir / "pred_as_is.jsonl", "gold", "as_is");
    const auto asis =
        read_pred_file(pred_dir / "pred_as_is.jsonl", "pred", "as_is");
    std::map<RoleKind, std::map<std::string, std::string>> without;
    for (RoleKind role : kAllRoles) {
      const Setting setting = Setting::without(role);
      const fs::path path = pred_dir / ("pred_" + setting.id() + ".jsonl");
      if (fs::exists(path))
        without[role] = read_pred_file(path, "pred", setting.id());
    }
    if (without.empty())
      throw ConfigError(
          "missing predictions for any 'without' setting in " + args.pred_dir);
    const auto examples = mine_disagreements(gold, asis, without);
    std::cout << examples.size() << " disagreement examples\n";
    std::ofstream(out_dir / "disagreements.json")
        << disagreements_json(examples).dump(2) << "\n";
    did_anything = true;
  }

  if (!did_anything)
    throw ConfigError(
        "nothing to analyze: pass --role, --token, or --disagreements");
}

// --- report ---------------------------------------------------------------

struct ReportArgs {
  std::string results, out, dataset;
  std::vector<std::string> settings;
  bool per_emotion = false;
};

void cmd_report(const ReportArgs& args) {
  std::ifstream in(args.results);
  if (!in) throw ConfigError(args.results + ": cannot open results");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(args.results + ": " + e.what());
  }
  const ResultsTable table = results_from_json(j);

  std::string text;
  if (!args.per_emotion) {
    text = results_tsv(table);
  } else {
    std::string dataset = args.dataset;
    if (dataset.empty()) {
      if (table.rows.empty()) throw ConfigError("results table is empty");
      dataset = table.rows.front().dataset;
    }
    std::vector<Setting> settings;
    if (args.settings.empty()) {
      settings.push_back(Setting::as_is());
    } else {
      for (const std::string& id : args.settings) {
        const auto setting = Setting::from_id(id);
        if (!setting) throw ConfigError("unknown setting '" + id + "'");
        settings.push_back(*setting);
      }
    }
    // Label rows, one P/R/F1 block per requested setting, scores x100.
    std::ostringstream out_text;
    out_text << "label";
    for (const Setting& setting : settings)
      out_text << '\t' << setting.id() << "_p\t" << setting.id() << "_r\t"
               << setting.id() << "_f1";
    out_text << '\n';
    const auto first = per_emotion_report(table, dataset, settings.front());
    for (std::size_t row = 0; row < first.size(); ++row) {
      out_text << first[row].label;
      for (const Setting& setting : settings) {
        const auto report = per_emotion_report(table, dataset, setting);
        const PRF& prf = report.at(row).scores;
        out_text << '\t' << std::lround(prf.precision * 100) << '\t'
                 << std::lround(prf.recall * 100) << '\t'
                 << std::lround(prf.f1 * 100);
      }
      out_text << '\n';
    }
    text = out_text.str();
  }

  if (args.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream file(args.out);
    if (!file) throw ConfigError(args.out + ": cannot open for writing");
    file << text;
    std::cout << "wrote " << args.out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Role-aware ablation harness for emotion classification"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "Max worker threads (0 = auto)");

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand(
      "ingest", "Convert a source corpus to canonical JSONL");
  ingest->add_option("source", ingest_args.source, "Source file or directory")
      ->required();
  ingest->add_option("--adapter", ingest_args.adapter,
                     "canonical, es, eca, gne, et, or reman")
      ->required();
  ingest->add_option("--out", ingest_args.out, "Output JSONL path")->required();
  ingest->add_option("--label-map", ingest_args.label_map,
                     "Label map JSON to apply");
  ingest->add_option("--name", ingest_args.name, "Corpus name override");
  ingest->add_option("--opt", ingest_args.adapter_opts,
                     "Adapter option key=value (repeatable)");
  ingest->add_flag("--keep-multi", ingest_args.keep_multi,
                   "Keep multi-label instances instead of dropping them");

  std::string stats_path;
  CLI::App* stats = app.add_subcommand(
      "stats", "Instance and role statistics of a canonical corpus");
  stats->add_option("corpus", stats_path, "Canonical JSONL path")->required();

  SplitArgs split_args;
  CLI::App* split_cmd =
      app.add_subcommand("split", "Shuffle-split a canonical corpus");
  split_cmd->add_option("--in", split_args.in, "Canonical JSONL path")
      ->required();
  split_cmd->add_option("--out-dir", split_args.out_dir, "Output directory")
      ->required();
  split_cmd->add_option("--seed", split_args.seed, "Shuffle seed");
  split_cmd->add_option("--ratios", split_args.ratios,
                        "train,dev,test fractions");
  split_cmd->add_flag("--stratified", split_args.stratified,
                      "Split within each label");

  RunArgs run_args;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Execute an experiment spec or manifest");
  run_cmd->add_option("--spec", run_args.spec_path, "Experiment spec JSON");
  run_cmd->add_option("--manifest", run_args.manifest_path,
                      "Replay a manifest from an earlier run");
  run_cmd->add_option("--out", run_args.out, "Output directory override");
  run_cmd->add_option("--seed", run_args.seed, "Base seed override");
  run_cmd->add_option("--runs", run_args.runs, "Run count override");
  run_cmd->add_option("--backend", run_args.backend, "Backend override");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic role-determined corpus");
  synth_cmd->add_option("--out", synth_args.out, "Output JSONL path")
      ->required();
  synth_cmd->add_option("--n", synth_args.n, "Instance count");
  synth_cmd->add_option("--labels", synth_args.labels, "Comma-separated labels");
  synth_cmd->add_option("--role", synth_args.role, "Informative role");
  synth_cmd->add_option("--noise", synth_args.noise, "Label flip probability");
  synth_cmd->add_option("--seed", synth_args.seed, "Generator seed");
  synth_cmd->add_option("--vocab", synth_args.vocab,
                        "Vocabulary size role=N (repeatable)");
  synth_cmd->add_option("--confound", synth_args.confound,
                        "Role whose token is overwritten with the label");

  AnalyzeArgs analyze_args;
  CLI::App* analyze_cmd = app.add_subcommand(
      "analyze", "Role-token frequencies, distributions, disagreements");
  analyze_cmd->add_option("--in", analyze_args.in, "Canonical JSONL path");
  analyze_cmd->add_option("--out-dir", analyze_args.out_dir,
                          "Where to write reports");
  analyze_cmd->add_option("--role", analyze_args.role,
                          "Count tokens inside this role's spans");
  analyze_cmd->add_option("--top", analyze_args.top, "How many tokens");
  analyze_cmd->add_option("--stoplist", analyze_args.stoplist_path,
                          "File of tokens to exclude");
  analyze_cmd->add_option("--token", analyze_args.token,
                          "Comma-separated tokens for label distributions");
  analyze_cmd->add_option("--emotions", analyze_args.emotions,
                          "Emotion subset for distributions");
  analyze_cmd->add_flag("--no-fold", analyze_args.no_fold,
                        "Disable case folding");
  analyze_cmd->add_flag("--disagreements", analyze_args.disagreements,
                        "Mine As-Is/Without disagreement examples");
  analyze_cmd->add_option("--pred-dir", analyze_args.pred_dir,
                          "Run directory with pred_<setting>.jsonl files");

  ReportArgs report_args;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Render result tables from results.json");
  report_cmd->add_option("--results", report_args.results, "results.json path")
      ->required();
  report_cmd->add_option("--out", report_args.out,
                         "Write to file instead of stdout");
  report_cmd->add_flag("--per-emotion", report_args.per_emotion,
                       "Per-label breakdown instead of the score matrix");
  report_cmd->add_option("--dataset", report_args.dataset,
                         "Dataset for --per-emotion");
  report_cmd->add_option("--setting", report_args.settings,
                         "Setting ids for --per-emotion (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (jobs > 0) kernels::set_max_threads(jobs);

  try {
    if (app.got_subcommand(ingest)) cmd_ingest(ingest_args);
    else if (app.got_subcommand(stats)) cmd_stats(stats_path);
    else if (app.got_subcommand(split_cmd)) cmd_split(split_args);
    else if (app.got_subcommand(run_cmd)) {
      if (run_args.spec_path.empty() == run_args.manifest_path.empty())
        throw ConfigError("run needs exactly one of --spec or --manifest");
      cmd_run(run_args);
    } else if (app.got_subcommand(synth_cmd)) cmd_synth(synth_args);
    else if (app.got_subcommand(analyze_cmd)) cmd_analyze(analyze_args);
    else if (app.got_subcommand(report_cmd)) cmd_report(report_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
