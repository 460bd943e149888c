#include "rolemask/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "rolemask/rng.hpp"

namespace rolemask {

namespace {

constexpr std::size_t kDefaultVocab = 20;

const char* role_prefix(RoleKind role) {
  switch (role) {
    case RoleKind::experiencer: return "exp";
    case RoleKind::cue: return "cue";
    case RoleKind::target: return "tgt";
    case RoleKind::stimulus: return "stim";
  }
  return "";
}

std::size_t vocab_of(const SynthSpec& spec, RoleKind role) {
  auto it = spec.vocab_sizes.find(role);
  return it != spec.vocab_sizes.end() ? it->second : kDefaultVocab;
}

std::string role_token(RoleKind role, std::size_t index) {
  return role_prefix(role) + std::to_string(index);
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.n_instances == 0)
    throw ConfigError("synth: n_instances must be at least 1");
  if (spec.labels.size() < 2)
    throw ConfigError("synth: at least two labels required");
  std::set<std::string> unique(spec.labels.begin(), spec.labels.end());
  if (unique.size() != spec.labels.size())
    throw ConfigError("synth: duplicate labels");
  for (const std::string& label : spec.labels)
    if (label.empty()) throw ConfigError("synth: empty label");
  if (spec.noise < 0.0 || spec.noise >= 1.0)
    throw ConfigError("synth: noise must lie in [0, 1)");
  for (RoleKind role : kAllRoles)
    if (vocab_of(spec, role) == 0)
      throw ConfigError("synth: vocabulary for role '" +
                        std::string(role_prefix(role)) + "' is empty");
  if (vocab_of(spec, spec.informative_role) < spec.labels.size())
    throw ConfigError(
        "synth: the informative role needs a vocabulary at least as large as "
        "the label set, or some labels never occur");
  if (spec.confound_role && vocab_of(spec, *spec.confound_role) < spec.labels.size())
    throw ConfigError(
        "synth: the confound role needs a vocabulary at least as large as "
        "the label set");
  if (spec.confound_role && *spec.confound_role == spec.informative_role)
    throw ConfigError("synth: confound role must differ from the informative role");
}

Corpus generate_synthetic(const SynthSpec& spec, SynthReport* report) {
  validate(spec);
  Rng rng(spec.seed);
  const std::size_t n_labels = spec.labels.size();

  Corpus corpus;
  corpus.name = "synth";
  corpus.label_set = spec.labels;
  std::sort(corpus.label_set.begin(), corpus.label_set.end());

  for (std::size_t i = 0; i < spec.n_instances; ++i) {
    // Fixed draw order per instance keeps the stream stable under seed.
    std::size_t exp_idx = rng.uniform_index(vocab_of(spec, RoleKind::experiencer));
    std::size_t cue_idx = rng.uniform_index(vocab_of(spec, RoleKind::cue));
    std::size_t tgt_idx = rng.uniform_index(vocab_of(spec, RoleKind::target));
    const std::size_t stim_len = 1 + rng.uniform_index(4);
    std::vector<std::size_t> stim_idx(stim_len);
    for (std::size_t& s : stim_idx)
      s = rng.uniform_index(vocab_of(spec, RoleKind::stimulus));

    std::array<std::size_t, 4> role_idx{exp_idx, cue_idx, tgt_idx, 0};
    auto index_of = [&](RoleKind role) -> std::size_t& {
      return role_idx[static_cast<std::size_t>(role)];
    };

    std::size_t label_idx = index_of(spec.informative_role) % n_labels;
    if (spec.informative_role == RoleKind::stimulus)
      label_idx = stim_idx.front() % n_labels;

    const bool flipped = spec.noise > 0.0 && rng.bernoulli(spec.noise);
    if (flipped)
      label_idx =
          (label_idx + 1 + rng.uniform_index(n_labels - 1)) % n_labels;

    if (spec.confound_role) {
      if (*spec.confound_role == RoleKind::stimulus)
        stim_idx.front() = label_idx;
      else
        index_of(*spec.confound_role) = label_idx;
    }

    AnnotatedInstance inst;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06zu", i);
    inst.id = id;
    inst.tokens = {role_token(RoleKind::experiencer, role_idx[0]),
                   role_token(RoleKind::cue, role_idx[1]),
                   role_token(RoleKind::target, role_idx[2]), "because"};
    for (std::size_t s : stim_idx)
      inst.tokens.push_back(role_token(RoleKind::stimulus, s));
    inst.label = spec.labels[label_idx];
    inst.raw_label = inst.label;
    inst.roles[RoleKind::experiencer] = {{0, 1}};
    inst.roles[RoleKind::cue] = {{1, 2}};
    inst.roles[RoleKind::target] = {{2, 3}};
    inst.roles[RoleKind::stimulus] = {{4, 4 + stim_len}};

    if (flipped && report) report->flipped_ids.push_back(inst.id);
    corpus.instances.push_back(std::move(inst));
  }
  validate(corpus);
  return corpus;
}

std::string synth_true_label(const SynthSpec& spec,
                             const AnnotatedInstance& instance) {
  const std::vector<Span>* spans = instance.spans_of(spec.informative_role);
  if (!spans || spans->empty())
    throw CorpusError("synth_true_label: instance '" + instance.id +
                      "' lacks the informative role");
  const std::string& token = instance.tokens[spans->front().start];
  const std::string prefix = role_prefix(spec.informative_role);
  if (token.rfind(prefix, 0) != 0)
    throw CorpusError("synth_true_label: token '" + token +
                      "' is not a generated filler");
  const std::size_t index = std::stoul(token.substr(prefix.size()));
  return spec.labels[index % spec.labels.size()];
}

}  // namespace rolemask
