#include "rolemask/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rolemask/rng.hpp"

namespace rolemask {

namespace {

// Punctuation peeled off token edges. '#', '@', '$', '&', '-', '_' stay
// attached so hashtags, handles and compounds survive.
bool is_edge_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'': case '(': case ')': case '[': case ']':
    case '{': case '}':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Tokenized tokenize(const std::string& text) {
  Tokenized out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto emit = [&out](const std::string& tok, std::size_t b, std::size_t e) {
    out.tokens.push_back(tok);
    out.char_starts.push_back(b);
    out.char_ends.push_back(e);
  };
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    // [i, j) is a whitespace-delimited chunk; peel edge punctuation.
    std::size_t b = i, e = j;
    std::vector<std::pair<std::size_t, std::size_t>> leading, trailing;
    while (b < e && is_edge_punct(text[b])) {
      leading.emplace_back(b, b + 1);
      ++b;
    }
    while (e > b && is_edge_punct(text[e - 1])) {
      trailing.emplace_back(e - 1, e);
      --e;
    }
    for (auto [pb, pe] : leading) emit(text.substr(pb, 1), pb, pe);
    if (b < e) emit(text.substr(b, e - b), b, e);
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it)
      emit(text.substr(it->first, 1), it->first, it->second);
    i = j;
  }
  return out;
}

Tokenized tokenize_whitespace(const std::string& text) {
  Tokenized out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    out.tokens.push_back(text.substr(i, j - i));
    out.char_starts.push_back(i);
    out.char_ends.push_back(j);
    i = j;
  }
  return out;
}

bool project_char_span(const Tokenized& tok, std::size_t cbegin,
                       std::size_t cend, Span& out) {
  std::size_t first = tok.tokens.size(), last = 0;
  bool found = false;
  for (std::size_t t = 0; t < tok.tokens.size(); ++t) {
    // Token overlaps [cbegin, cend)?
    if (tok.char_starts[t] < cend && tok.char_ends[t] > cbegin) {
      if (!found) first = t;
      last = t;
      found = true;
    }
  }
  if (!found) return false;
  out = Span{first, last + 1};
  return true;
}

Corpus load_canonical(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  Corpus corpus;
  corpus.name = name.empty() ? path : name;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(path + ":" + std::to_string(lineno) +
                        ": malformed JSON: " + e.what());
    }
    auto field_error = [&](const std::string& field) {
      return CorpusError(path + ":" + std::to_string(lineno) +
                         ": missing or malformed field '" + field + "'");
    };
    AnnotatedInstance inst;
    if (!j.contains("id") || !j["id"].is_string()) throw field_error("id");
    inst.id = j["id"].get<std::string>();
    if (!j.contains("tokens") || !j["tokens"].is_array())
      throw field_error("tokens");
    for (const auto& t : j["tokens"]) {
      if (!t.is_string()) throw field_error("tokens");
      inst.tokens.push_back(t.get<std::string>());
    }
    if (!j.contains("label") || !j["label"].is_string())
      throw field_error("label");
    inst.label = j["label"].get<std::string>();
    inst.raw_label = inst.label;
    if (j.contains("roles")) {
      if (!j["roles"].is_object()) throw field_error("roles");
      for (auto it = j["roles"].begin(); it != j["roles"].end(); ++it) {
        auto role = role_from_name(it.key());
        if (!role)
          throw CorpusError(path + ":" + std::to_string(lineno) +
                            ": unknown role '" + it.key() + "'");
        if (!it.value().is_array()) throw field_error("roles");
        std::vector<Span> spans;
        for (const auto& pair : it.value()) {
          if (!pair.is_array() || pair.size() != 2 ||
              !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned())
            throw field_error("roles");
          spans.push_back(Span{pair[0].get<std::size_t>(),
                               pair[1].get<std::size_t>()});
        }
        inst.roles[*role] = std::move(spans);
      }
    }
    validate(inst);
    corpus.instances.push_back(std::move(inst));
  }
  refresh_label_set(corpus);
  validate(corpus);
  return corpus;
}

void save_canonical(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  for (const auto& inst : corpus.instances) {
    nlohmann::ordered_json j;
    j["id"] = inst.id;
    j["tokens"] = inst.tokens;
    j["label"] = inst.label;
    if (!inst.roles.empty()) {
      nlohmann::ordered_json roles;
      for (const auto& [role, spans] : inst.roles) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const Span& s : spans) arr.push_back({s.start, s.end});
        roles[role_name(role)] = std::move(arr);
      }
      j["roles"] = std::move(roles);
    }
    out << j.dump() << "\n";
  }
}

Corpus map_labels(const Corpus& corpus, const LabelMap& map,
                  MapReport* report) {
  Corpus out;
  out.name = corpus.name;
  std::size_t dropped = 0;
  for (const auto& inst : corpus.instances) {
    auto it = map.map.find(inst.label);
    if (it != map.map.end()) {
      AnnotatedInstance mapped = inst;
      mapped.raw_label = inst.raw_label.empty() ? inst.label : inst.raw_label;
      mapped.label = it->second;
      out.instances.push_back(std::move(mapped));
      continue;
    }
    switch (map.policy) {
      case LabelPolicy::error:
        throw CorpusError("unmapped label '" + inst.label + "' (instance '" +
                          inst.id + "') under error policy");
      case LabelPolicy::drop:
        ++dropped;
        break;
      case LabelPolicy::pass:
        out.instances.push_back(inst);
        break;
    }
  }
  refresh_label_set(out);
  if (report) report->dropped = dropped;
  return out;
}

Corpus filter_single_label(const Corpus& corpus, FilterReport* report) {
  Corpus out;
  out.name = corpus.name;
  std::size_t removed = 0;
  for (const auto& inst : corpus.instances) {
    if (inst.multi_label) {
      ++removed;
      continue;
    }
    out.instances.push_back(inst);
  }
  refresh_label_set(out);
  if (report) report->removed = removed;
  return out;
}

CorpusStats compute_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.instance_count = corpus.instances.size();
  std::size_t token_total = 0;
  std::map<RoleKind, std::pair<std::size_t, std::size_t>> acc;  // spans, tokens
  std::map<RoleKind, std::size_t> with_role;
  for (const auto& inst : corpus.instances) {
    token_total += inst.tokens.size();
    for (const auto& [role, spans] : inst.roles) {
      if (spans.empty()) continue;
      with_role[role] += 1;
      auto& [count, tokens] = acc[role];
      count += spans.size();
      for (const Span& s : spans) tokens += s.length();
    }
  }
  if (stats.instance_count > 0)
    stats.mean_instance_length =
        static_cast<double>(token_total) / static_cast<double>(stats.instance_count);
  for (const auto& [role, ct] : acc) {
    RoleStats rs;
    rs.instances_with_role = with_role[role];
    rs.filler_count = ct.first;
    rs.mean_filler_length =
        static_cast<double>(ct.second) / static_cast<double>(ct.first);
    stats.roles[role] = rs;
  }
  return stats;
}

namespace {

std::tuple<std::vector<std::size_t>, std::vector<std::size_t>,
           std::vector<std::size_t>>
split_indices(std::size_t n, const SplitRatios& ratios, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  const auto n_dev = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios.dev));
  const auto n_test = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios.test));
  const std::size_t n_train = n - n_dev - n_test;
  std::vector<std::size_t> train(idx.begin(), idx.begin() + n_train);
  std::vector<std::size_t> dev(idx.begin() + n_train,
                               idx.begin() + n_train + n_dev);
  std::vector<std::size_t> test(idx.begin() + n_train + n_dev, idx.end());
  return {train, dev, test};
}

}  // namespace

std::tuple<Corpus, Corpus, Corpus> split(const Corpus& corpus,
                                         const SplitRatios& ratios,
                                         std::uint64_t seed, bool stratified) {
  if (ratios.train <= 0 || ratios.dev <= 0 || ratios.test <= 0)
    throw ConfigError("split ratios must be positive");
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  if (corpus.instances.size() < 3)
    throw ConfigError("corpus too small to split: " +
                      std::to_string(corpus.instances.size()) + " instances");

  Rng rng(seed);
  std::vector<std::size_t> train_idx, dev_idx, test_idx;
  if (!stratified) {
    std::tie(train_idx, dev_idx, test_idx) =
        split_indices(corpus.instances.size(), ratios, rng);
  } else {
    // Group instance positions by label (label order fixed by label_set),
    // then apply the same floor rule per group.
    for (const auto& label : corpus.label_set) {
      std::vector<std::size_t> group;
      for (std::size_t i = 0; i < corpus.instances.size(); ++i)
        if (corpus.instances[i].label == label) group.push_back(i);
      if (group.empty()) continue;
      auto [tr, dv, te] = split_indices(group.size(), ratios, rng);
      for (auto i : tr) train_idx.push_back(group[i]);
      for (auto i : dv) dev_idx.push_back(group[i]);
      for (auto i : te) test_idx.push_back(group[i]);
    }
  }

  auto take = [&corpus](const std::vector<std::size_t>& idx,
                        const std::string& suffix) {
    Corpus part;
    part.name = corpus.name + suffix;
    part.instances.reserve(idx.size());
    for (auto i : idx) part.instances.push_back(corpus.instances[i]);
    part.label_set = corpus.label_set;
    return part;
  };
  return {take(train_idx, ".train"), take(dev_idx, ".dev"),
          take(test_idx, ".test")};
}

}  // namespace rolemask
