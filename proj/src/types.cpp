#include "rolemask/types.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace rolemask {

const std::string& role_name(RoleKind r) {
  static const std::string names[4] = {"experiencer", "cue", "target",
                                       "stimulus"};
  return names[static_cast<int>(r)];
}

std::optional<RoleKind> role_from_name(const std::string& name) {
  for (RoleKind r : kAllRoles)
    if (role_name(r) == name) return r;
  return std::nullopt;
}

void validate(const AnnotatedInstance& inst) {
  if (inst.tokens.empty())
    throw CorpusError("instance '" + inst.id + "': empty token sequence");
  const std::size_t n = inst.tokens.size();
  for (const auto& [role, spans] : inst.roles) {
    std::vector<Span> sorted = spans;
    std::sort(sorted.begin(), sorted.end(),
              [](const Span& a, const Span& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const Span& s = sorted[i];
      if (s.start >= s.end || s.end > n)
        throw CorpusError("instance '" + inst.id + "': span [" +
                          std::to_string(s.start) + "," +
                          std::to_string(s.end) + ") of role " +
                          role_name(role) + " out of bounds for " +
                          std::to_string(n) + " tokens");
      if (i > 0 && sorted[i - 1].end > s.start)
        throw CorpusError("instance '" + inst.id + "': overlapping spans in role " +
                          role_name(role));
    }
  }
}

void validate(const Corpus& corpus) {
  std::set<std::string> labels(corpus.label_set.begin(),
                               corpus.label_set.end());
  std::set<std::string> ids;
  for (const auto& inst : corpus.instances) {
    validate(inst);
    if (!labels.count(inst.label))
      throw CorpusError("instance '" + inst.id + "': label '" + inst.label +
                        "' not in corpus label set");
    if (!ids.insert(inst.id).second)
      throw CorpusError("duplicate instance id '" + inst.id + "'");
  }
}

void refresh_label_set(Corpus& corpus) {
  std::set<std::string> labels;
  for (const auto& inst : corpus.instances) labels.insert(inst.label);
  corpus.label_set.assign(labels.begin(), labels.end());
}

LabelMap LabelMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open label map file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("label map '" + path + "': " + e.what());
  }
  LabelMap lm;
  if (!j.is_object() || !j.contains("map") || !j["map"].is_object())
    throw ConfigError("label map '" + path + "': expected {\"map\": {...}, \"policy\": ...}");
  for (auto it = j["map"].begin(); it != j["map"].end(); ++it) {
    if (!it.value().is_string())
      throw ConfigError("label map '" + path + "': value for '" + it.key() +
                        "' is not a string");
    lm.map[it.key()] = it.value().get<std::string>();
  }
  const std::string policy = j.value("policy", std::string("error"));
  if (policy == "error")
    lm.policy = LabelPolicy::error;
  else if (policy == "drop")
    lm.policy = LabelPolicy::drop;
  else if (policy == "pass")
    lm.policy = LabelPolicy::pass;
  else
    throw ConfigError("label map '" + path + "': unknown policy '" + policy +
                      "'");
  return lm;
}

}  // namespace rolemask
