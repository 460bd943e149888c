// Acceptance gate: one numbered check per shipped guarantee, each printed as
// a single PASS/FAIL line with its runtime. The data-dependent check prints
// SKIP when its inputs are absent. Exit status is the number of failures.
//
// Every tolerance and time budget is stated inline next to the check it
// governs; the oracles here are deliberately independent of the library code
// they test (left-to-right marker insertion vs. the library's right-to-left,
// hand-tallied confusion cells vs. macro_prf, finite differences vs. the
// analytic backward pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rolemask/corpus.hpp"
#include "rolemask/embeddings.hpp"
#include "rolemask/eval.hpp"
#include "rolemask/experiment.hpp"
#include "rolemask/metrics.hpp"
#include "rolemask/model.hpp"
#include "rolemask/recurrent.hpp"
#include "rolemask/rng.hpp"
#include "rolemask/synth.hpp"
#include "rolemask/transform.hpp"
#include "rolemask/types.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace rolemask;

namespace {

struct Skip {
  std::string reason;
};

std::vector<std::string> g_faults;

void require(bool ok, const std::string& what) {
  if (!ok) g_faults.push_back(what);
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

// --- 1. transformation properties on fuzzed instances ----------------------
// 1,000 random instances; Only/Without footprints partition the indices,
// masking preserves length and touches exactly the footprint, Position adds
// two markers per span at the right offsets, strip_markers restores the
// original tokens. Zero violations allowed, under 10 s.

void fuzz_transformations() {
  Rng rng(2024);
  const SpecialTokens specials;
  std::size_t violations = 0;
  std::string first_fault;

  const auto flag = [&](const std::string& what) {
    if (violations == 0) first_fault = what;
    ++violations;
  };

  for (int trial = 0; trial < 1000; ++trial) {
    AnnotatedInstance inst;
    inst.id = "fz" + std::to_string(trial);
    inst.label = inst.raw_label = "l";
    const std::size_t n = 1 + rng.uniform_index(40);
    for (std::size_t t = 0; t < n; ++t) {
      std::string tok;
      const std::size_t len = 1 + rng.uniform_index(8);
      for (std::size_t c = 0; c < len; ++c)
        tok += static_cast<char>('a' + rng.uniform_index(26));
      inst.tokens.push_back(tok);  // lowercase, so never a special token
    }
    for (RoleKind role : kAllRoles) {
      std::vector<Span> spans;
      const std::size_t want = rng.uniform_index(4);
      for (std::size_t s = 0; s < want; ++s) {
        const std::size_t start = rng.uniform_index(n);
        const Span cand{start, start + 1 + rng.uniform_index(n - start)};
        bool clash = false;
        for (const Span& other : spans)
          clash |= cand.start < other.end && other.start < cand.end;
        if (!clash) spans.push_back(cand);
      }
      if (!spans.empty()) {
        std::sort(spans.begin(), spans.end(),
                  [](const Span& a, const Span& b) { return a.start < b.start; });
        inst.roles[role] = spans;
      }
    }

    if (apply_setting(inst, Setting::as_is(), specials).tokens != inst.tokens)
      flag(inst.id + ": as_is changed the tokens");

    for (RoleKind role : kAllRoles) {
      const auto only_set = masked_index_set(inst, Setting::only(role));
      const auto without_set = masked_index_set(inst, Setting::without(role));

      // the two footprints partition [0, n)
      if (only_set.size() + without_set.size() != n)
        flag(inst.id + ": footprint sizes do not sum to the length");
      for (std::size_t t = 0; t < n; ++t) {
        const bool in_only = only_set.count(t) > 0;
        const bool in_without = without_set.count(t) > 0;
        if (in_only == in_without)
          flag(inst.id + ": index " + std::to_string(t) +
               " not in exactly one footprint");
      }

      for (const Setting& setting :
           {Setting::only(role), Setting::without(role)}) {
        const auto& masked = masked_index_set(inst, setting);
        const TransformedInstance out = apply_setting(inst, setting, specials);
        if (out.tokens.size() != n)
          flag(inst.id + ": " + setting.id() + " changed the length");
        else
          for (std::size_t t = 0; t < n; ++t) {
            const std::string& expect =
                masked.count(t) ? specials.mask : inst.tokens[t];
            if (out.tokens[t] != expect)
              flag(inst.id + ": " + setting.id() + " wrong token at " +
                   std::to_string(t));
          }
      }

      // position: two markers per span, placed by an independent
      // left-to-right insertion, and removable without residue
      const auto* spans = inst.spans_of(role);
      const std::size_t n_spans = spans ? spans->size() : 0;
      const TransformedInstance pos =
          apply_setting(inst, Setting::position(role), specials);
      if (pos.tokens.size() != n + 2 * n_spans)
        flag(inst.id + ": position_" + role_name(role) + " length off");
      std::vector<std::string> expect = inst.tokens;
      std::size_t shift = 0;
      if (spans)
        for (const Span& span : *spans) {
          expect.insert(expect.begin() + span.start + shift, specials.open);
          expect.insert(expect.begin() + span.end + shift + 1, specials.close);
          shift += 2;
        }
      if (pos.tokens != expect)
        flag(inst.id + ": position_" + role_name(role) + " marker placement");
      if (strip_markers(pos.tokens, specials) != inst.tokens)
        flag(inst.id + ": strip_markers is not the inverse of position");
    }
  }

  require(violations == 0, std::to_string(violations) +
                               " violations; first: " + first_fault);
}

// --- 2. macro metric oracle ------------------------------------------------
// macro_prf against a hand-tallied per-label computation on 10,000 random
// confusion matrices of up to 6 labels, zero rows/columns included, agreeing
// to 1e-12. Under 30 s.

void metric_oracle() {
  Rng rng(7);
  const double eps = 1e-12;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n_labels = 1 + rng.uniform_index(6);
    ConfusionMatrix m;
    for (std::size_t l = 0; l < n_labels; ++l)
      m.label_set.push_back("l" + std::to_string(l));
    m.counts.assign(n_labels, std::vector<std::size_t>(n_labels, 0));
    for (auto& row : m.counts)
      for (auto& cell : row)
        cell = rng.bernoulli(0.4) ? 0 : rng.uniform_index(20);
    // force whole empty rows and columns regularly: the zero conventions
    // are the part a naive implementation gets wrong
    if (trial % 7 == 0)
      m.counts[rng.uniform_index(n_labels)].assign(n_labels, 0);
    if (trial % 11 == 0) {
      const std::size_t col = rng.uniform_index(n_labels);
      for (auto& row : m.counts) row[col] = 0;
    }

    const MacroScores got = macro_prf(m);
    double sum_p = 0, sum_r = 0, sum_f = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n_labels; ++i) {
      double tp = static_cast<double>(m.counts[i][i]), fp = 0, fn = 0;
      for (std::size_t j = 0; j < n_labels; ++j) {
        if (j == i) continue;
        fp += static_cast<double>(m.counts[j][i]);
        fn += static_cast<double>(m.counts[i][j]);
      }
      const double p = tp + fp == 0 ? 0.0 : tp / (tp + fp);
      const double r = tp + fn == 0 ? 0.0 : tp / (tp + fn);
      const double f = p + r == 0 ? 0.0 : 2 * p * r / (p + r);
      sum_p += p;
      sum_r += r;
      sum_f += f;
      const PRF& prf = got.per_label.at(m.label_set[i]);
      ok &= std::abs(prf.precision - p) <= eps &&
            std::abs(prf.recall - r) <= eps && std::abs(prf.f1 - f) <= eps;
    }
    const double d = static_cast<double>(n_labels);
    ok &= std::abs(got.precision - sum_p / d) <= eps &&
          std::abs(got.recall - sum_r / d) <= eps &&
          std::abs(got.f1 - sum_f / d) <= eps;
    if (!ok) {
      require(false, "trial " + std::to_string(trial) +
                         " disagrees with the brute-force tally");
      return;
    }
  }
}

// --- 3. golden setting renderings ------------------------------------------
// The annotated example sentence under every setting/role row, compared
// token-for-token against the frozen renderings.

void golden_renderings() {
  AnnotatedInstance inst = testutil::make_instance(
      "golden",
      {"John", "hates", "cars", "because", "they", "pollute", "the",
       "environment"},
      "anger",
      {{RoleKind::experiencer, {{0, 1}}},
       {RoleKind::cue, {{1, 2}}},
       {RoleKind::target, {{2, 3}}},
       {RoleKind::stimulus, {{5, 8}}}});
  const SpecialTokens specials;

  const std::vector<std::pair<Setting, std::string>> rows = {
      {Setting::as_is(), "John hates cars because they pollute the environment"},
      {Setting::only(RoleKind::stimulus), "X X X X X pollute the environment"},
      {Setting::only(RoleKind::experiencer), "John X X X X X X X"},
      {Setting::only(RoleKind::target), "X X cars X X X X X"},
      {Setting::without(RoleKind::stimulus), "John hates cars because they X X X"},
      {Setting::without(RoleKind::experiencer),
       "X hates cars because they pollute the environment"},
      {Setting::without(RoleKind::target),
       "John hates X because they pollute the environment"},
      {Setting::position(RoleKind::stimulus),
       "John hates cars because they ⌊ pollute the environment ⌉"},
      {Setting::position(RoleKind::experiencer),
       "⌊ John ⌉ hates cars because they pollute the environment"},
      {Setting::position(RoleKind::target),
       "John hates ⌊ cars ⌉ because they pollute the environment"}};

  for (const auto& [setting, expect] : rows) {
    const TransformedInstance out = apply_setting(inst, setting, specials);
    std::string joined;
    for (const std::string& tok : out.tokens) {
      if (!joined.empty()) joined += ' ';
      joined += tok;
    }
    require(joined == expect,
            setting.id() + " rendered '" + joined + "', expected '" + expect + "'");
  }
}

// --- 4. ablation on a cue-determined corpus --------------------------------
// 2,000 instances whose label is a function of the cue token (5% label
// noise), linear backend, 3 runs. Masking everything but the cue keeps the
// signal, masking the cue destroys it, markers leave it intact:
//   F1(as_is) >= 0.90   F1(only_cue) >= 0.90
//   F1(without_cue) <= 0.35 (chance 0.25 + 0.10 slack)
//   F1(position_cue) >= F1(as_is) - 0.02
// Under 5 min.

void cue_ablation() {
  SynthSpec spec;
  spec.n_instances = 2000;
  spec.labels = {"a", "b", "c", "d"};
  spec.informative_role = RoleKind::cue;
  spec.noise = 0.05;
  spec.seed = 11;
  const Corpus corpus = generate_synthetic(spec);

  const EmbeddingTable table(256, OovPolicy::random_seeded, 0);
  const std::vector<Setting> settings = {
      Setting::as_is(), Setting::only(RoleKind::cue),
      Setting::without(RoleKind::cue), Setting::position(RoleKind::cue)};
  ResultsTable results =
      run_experiment(corpus, settings, "linear", TrainConfig{}, 3, 5, table);

  const double as_is = results.at("synth", Setting::as_is()).mean.f1;
  const double only = results.at("synth", Setting::only(RoleKind::cue)).mean.f1;
  const double without =
      results.at("synth", Setting::without(RoleKind::cue)).mean.f1;
  const double position =
      results.at("synth", Setting::position(RoleKind::cue)).mean.f1;

  require(as_is >= 0.90, fmt("F1(as_is) %.3f below 0.90", as_is));
  require(only >= 0.90, fmt("F1(only_cue) %.3f below 0.90", only));
  require(without <= 0.35, fmt("F1(without_cue) %.3f above 0.35", without));
  require(position >= as_is - 0.02,
          fmt("F1(position_cue) %.3f below F1(as_is) %.3f - 0.02", position,
              as_is));
}

// --- 5. confounder detection -----------------------------------------------
// Train corpus: the experiencer token is overwritten with the label, making
// it a perfect in-corpus predictor; the cue carries the real signal under
// 10% noise. Test corpus: same recipe and vocabulary, no overwrite, so the
// experiencer is uninformative there. A linear model trained as-is leans on
// the shortcut and pays for it at test time; masking the experiencer forces
// it onto the cue:  F1(without_experiencer) >= F1(as_is) + 0.05. Under 5 min.

void confounder_detection() {
  SynthSpec base;
  base.n_instances = 2000;
  base.labels = {"a", "b", "c", "d"};
  base.informative_role = RoleKind::cue;
  base.noise = 0.10;
  base.seed = 21;

  SynthSpec confounded = base;
  confounded.confound_role = RoleKind::experiencer;
  SynthSpec clean = base;
  clean.seed = 22;
  clean.n_instances = 1000;

  const Corpus train_corpus = generate_synthetic(confounded);
  const Corpus test_corpus = generate_synthetic(clean);
  const auto [train_part, dev_part, unused] =
      split(train_corpus, SplitRatios{}, 31);

  const EmbeddingTable table(256, OovPolicy::random_seeded, 0);
  const SpecialTokens specials;

  const auto test_f1 = [&](const Setting& setting) {
    const auto train_set = transform_corpus(train_part, setting, specials);
    const auto dev_set = transform_corpus(dev_part, setting, specials);
    const auto test_set = transform_corpus(test_corpus, setting, specials);
    TrainConfig config;
    config.seed = 3;
    const auto model = train("linear", train_set, dev_set, table, config,
                             train_corpus.label_set);
    const auto pred = model->predict(test_set);
    std::vector<std::string> gold;
    for (const TransformedInstance& inst : test_set) gold.push_back(inst.label);
    return macro_prf(confusion(gold, pred, train_corpus.label_set)).f1;
  };

  const double as_is = test_f1(Setting::as_is());
  const double without = test_f1(Setting::without(RoleKind::experiencer));
  require(without >= as_is + 0.05,
          fmt("F1(without_experiencer) %.3f not 0.05 above F1(as_is) %.3f",
              without, as_is));
}

// --- 6. stimulus-annotated emotion data (conditional) ----------------------
// Needs the original stimulus-annotated emotion corpus (the two-file
// directory layout the 'es' adapter reads) and 300-d pretrained vectors:
//   ROLEMASK_ES_DATA=<dir>  ROLEMASK_GLOVE=<vectors.txt>
// Checks the published corpus statistics exactly (2414 instances, mean
// length 20.60; 820 stimulus spans, mean length 7.29) and that the recurrent
// backend reaches macro-F1 >= 0.75 at as_is over 10 runs, with
// position_stimulus no more than 0.02 below. Under 30 min.

void emotion_data_reproduction() {
  const char* data = std::getenv("ROLEMASK_ES_DATA");
  const char* vectors = std::getenv("ROLEMASK_GLOVE");
  if (!data || !vectors)
    throw Skip{"set ROLEMASK_ES_DATA and ROLEMASK_GLOVE to enable"};

  const Corpus corpus = load_corpus(data, "es", {});
  const CorpusStats stats = compute_stats(corpus);
  require(stats.instance_count == 2414,
          "instance count " + std::to_string(stats.instance_count) +
              ", expected 2414");
  require(std::lround(stats.mean_instance_length * 100) == 2060,
          fmt("mean instance length %.2f, expected 20.60",
              stats.mean_instance_length));
  const auto it = stats.roles.find(RoleKind::stimulus);
  if (it == stats.roles.end()) {
    require(false, "no stimulus spans found");
  } else {
    require(it->second.instances_with_role == 820,
            "stimulus instances " +
                std::to_string(it->second.instances_with_role) +
                ", expected 820");
    require(std::lround(it->second.mean_filler_length * 100) == 729,
            fmt("mean stimulus length %.2f, expected 7.29",
                it->second.mean_filler_length));
  }
  if (!g_faults.empty()) return;  // stats are off; skip the slow part

  const EmbeddingTable table =
      load_embeddings(vectors, 300, OovPolicy::random_seeded, 0);
  ResultsTable results = run_experiment(
      corpus, {Setting::as_is(), Setting::position(RoleKind::stimulus)},
      "recurrent", TrainConfig{}, 10, 1, table);
  const double as_is = results.at(corpus.name, Setting::as_is()).mean.f1;
  const double position =
      results.at(corpus.name, Setting::position(RoleKind::stimulus)).mean.f1;
  require(as_is >= 0.75, fmt("F1(as_is) %.3f below 0.75", as_is));
  require(position >= as_is - 0.02,
          fmt("F1(position_stimulus) %.3f below F1(as_is) %.3f - 0.02",
              position, as_is));
}

// --- 7. recurrent gradient check -------------------------------------------
// Analytic gradients of the summed cross-entropy over a 4-instance batch
// against central finite differences, 60 parameters sampled across every
// block, relative error at most 1e-4. The loss oracle goes through the
// dropout-free forward() path, not the backward pass under test.

void gradient_check() {
  BiLstmNet net(9, 6, 5, 3);
  Rng rng(99);
  net.init_kaiming(rng);
  for (std::size_t id = 0; id < net.vocab_size(); ++id) {
    std::vector<double> vec(net.embed_dim());
    for (double& v : vec) v = 0.5 * rng.normal();
    net.set_embedding_row(id, vec);
  }

  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> batch;
  for (const std::size_t len : {5, 3, 6, 4}) {
    std::vector<std::size_t> ids(len);
    for (std::size_t& id : ids) id = rng.uniform_index(net.vocab_size());
    batch.emplace_back(std::move(ids), rng.uniform_index(net.n_labels()));
  }

  const auto batch_loss = [&net, &batch]() {
    double total = 0;
    for (const auto& [ids, gold] : batch) {
      std::vector<const double*> xs;
      for (const std::size_t id : ids) xs.push_back(net.embedding_row(id));
      const std::vector<double> logits = net.forward(xs);
      double mx = logits[0];
      for (const double v : logits) mx = std::max(mx, v);
      double lse = 0;
      for (const double v : logits) lse += std::exp(v - mx);
      total += mx + std::log(lse) - logits[gold];
    }
    return total;
  };

  net.zero_grads();
  Rng dropout_rng(1);  // unused at rate zero; the pass is deterministic
  for (const auto& [ids, gold] : batch)
    net.forward_backward(ids, gold, 0.0, 0.0, dropout_rng, true);

  const auto blocks = net.blocks();
  std::set<std::pair<std::size_t, std::size_t>> picks;
  Rng pick(5);
  while (picks.size() < 60) {
    const std::size_t b = pick.uniform_index(blocks.size());
    picks.emplace(b, pick.uniform_index(blocks[b]->w.size()));
  }

  double worst = 0;
  std::string worst_at;
  for (const auto& [b, i] : picks) {
    double& w = blocks[b]->w[i];
    const double orig = w;
    const double h = 1e-5 * std::max(1.0, std::abs(orig));
    w = orig + h;
    const double up = batch_loss();
    w = orig - h;
    const double down = batch_loss();
    w = orig;
    const double numeric = (up - down) / (2 * h);
    const double analytic = blocks[b]->g[i];
    const double rel = std::abs(analytic - numeric) /
                       std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    if (rel > worst) {
      worst = rel;
      worst_at = blocks[b]->name + "[" + std::to_string(i) + "]";
    }
  }
  require(worst <= 1e-4,
          fmt("worst relative error %.2e above 1e-4 at ", worst) + worst_at);
}

// --- 8. manifest determinism -----------------------------------------------
// One experiment run writes a manifest; two replays from that manifest into
// fresh directories produce semantically identical results JSON (and match
// the original run).

void manifest_determinism() {
  testutil::TempDir work("rolemask-accept");

  SynthSpec synth;
  synth.n_instances = 240;
  synth.labels = {"a", "b", "c"};
  synth.informative_role = RoleKind::cue;
  synth.noise = 0.1;
  synth.seed = 17;
  save_canonical(generate_synthetic(synth), work.file("synth.jsonl"));

  ExperimentSpec spec;
  spec.dataset_path = work.file("synth.jsonl");
  spec.dataset_name = "synth";
  spec.settings = {Setting::as_is(), Setting::only(RoleKind::cue),
                   Setting::without(RoleKind::cue),
                   Setting::position(RoleKind::cue)};
  spec.backend = "linear";
  spec.n_runs = 2;
  spec.base_seed = 9;
  spec.embedding_dim = 32;
  spec.embedding_seed = 1;
  spec.output_dir = work.file("out0");
  run_from_spec(spec);

  const std::string manifest = work.file("out0") + "/manifest.json";
  run_from_spec(load_manifest(manifest, work.file("out1")));
  run_from_spec(load_manifest(manifest, work.file("out2")));

  const auto results = [](const std::string& dir) {
    std::ifstream in(dir + "/results.json");
    nlohmann::json j;
    in >> j;
    return j;
  };
  const nlohmann::json first = results(work.file("out1"));
  require(first == results(work.file("out2")),
          "two replays of one manifest disagree");
  require(first == results(work.file("out0")),
          "replay disagrees with the original run");
}

// --- harness ---------------------------------------------------------------

struct Criterion {
  int number;
  const char* name;
  double budget_seconds;  // 0 = untimed
  void (*fn)();
};

int run_all() {
  const std::vector<Criterion> criteria = {
      {1, "transformation properties on fuzzed instances", 10, fuzz_transformations},
      {2, "macro metric brute-force oracle", 30, metric_oracle},
      {3, "golden setting renderings", 0, golden_renderings},
      {4, "cue-determined synthetic ablation", 300, cue_ablation},
      {5, "confounder detection", 300, confounder_detection},
      {6, "emotion data reproduction (conditional)", 1800,
       emotion_data_reproduction},
      {7, "recurrent gradient check", 0, gradient_check},
      {8, "manifest determinism", 0, manifest_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    g_faults.clear();
    std::string skip_reason;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.fn();
    } catch (const Skip& skip) {
      skip_reason = skip.reason;
    } catch (const std::exception& e) {
      g_faults.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (c.budget_seconds > 0 && elapsed > c.budget_seconds)
      g_faults.push_back(fmt("took %.1f s, budget %.0f s", elapsed,
                             c.budget_seconds));

    const char* verdict = !skip_reason.empty() ? "SKIP"
                          : g_faults.empty()   ? "PASS"
                                               : "FAIL";
    std::printf("[%s] %d. %s (%.1fs)\n", verdict, c.number, c.name, elapsed);
    if (!skip_reason.empty()) std::printf("       %s\n", skip_reason.c_str());
    for (const std::string& fault : g_faults)
      std::printf("       %s\n", fault.c_str());
    if (!g_faults.empty()) ++failures;
    std::fflush(stdout);
  }
  return failures;
}

}  // namespace

int main() { return run_all(); }
