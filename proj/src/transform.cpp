#include "rolemask/transform.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace rolemask {

const std::string& setting_kind_name(SettingKind k) {
  static const std::string names[4] = {"as_is", "only", "without", "position"};
  return names[static_cast<int>(k)];
}

std::optional<SettingKind> setting_kind_from_name(const std::string& name) {
  for (SettingKind k : {SettingKind::as_is, SettingKind::only,
                        SettingKind::without, SettingKind::position})
    if (setting_kind_name(k) == name) return k;
  return std::nullopt;
}

std::string Setting::id() const {
  if (kind == SettingKind::as_is) return setting_kind_name(kind);
  return setting_kind_name(kind) + "_" + role_name(*role);
}

std::optional<Setting> Setting::from_id(const std::string& id) {
  if (id == setting_kind_name(SettingKind::as_is)) return Setting::as_is();
  const auto sep = id.find('_');
  if (sep == std::string::npos) return std::nullopt;
  const auto kind = setting_kind_from_name(id.substr(0, sep));
  const auto role = role_from_name(id.substr(sep + 1));
  if (!kind || *kind == SettingKind::as_is || !role) return std::nullopt;
  return Setting{*kind, *role};
}

void validate(const Setting& setting) {
  if (setting.kind == SettingKind::as_is) {
    if (setting.role)
      throw ConfigError("as_is setting must not carry a role");
  } else if (!setting.role) {
    throw ConfigError(setting_kind_name(setting.kind) +
                      " setting requires a role");
  }
}

SpecialTokens::SpecialTokens(std::string mask_tok, std::string open_tok,
                             std::string close_tok)
    : mask(std::move(mask_tok)),
      open(std::move(open_tok)),
      close(std::move(close_tok)) {
  if (mask.empty() || open.empty() || close.empty())
    throw ConfigError("special tokens must be non-empty");
  if (mask == open || mask == close || open == close)
    throw ConfigError("special tokens must be pairwise distinct");
}

namespace {

std::vector<Span> sorted_spans(const AnnotatedInstance& instance, RoleKind role) {
  std::vector<Span> spans;
  if (const auto* s = instance.spans_of(role)) spans = *s;
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  return spans;
}

}  // namespace

std::set<std::size_t> masked_index_set(const AnnotatedInstance& instance,
                                       const Setting& setting) {
  validate(setting);
  if (setting.kind != SettingKind::only && setting.kind != SettingKind::without)
    throw std::invalid_argument(
        "masked_index_set is defined for only/without, got " +
        setting_kind_name(setting.kind));
  std::set<std::size_t> inside;
  for (const Span& s : sorted_spans(instance, *setting.role))
    for (std::size_t i = s.start; i < s.end; ++i) inside.insert(i);
  if (setting.kind == SettingKind::without) return inside;
  std::set<std::size_t> outside;
  for (std::size_t i = 0; i < instance.tokens.size(); ++i)
    if (!inside.count(i)) outside.insert(i);
  return outside;
}

TransformedInstance apply_setting(const AnnotatedInstance& instance,
                                  const Setting& setting,
                                  const SpecialTokens& specials) {
  validate(setting);
  TransformedInstance out;
  out.source_id = instance.id;
  out.label = instance.label;
  out.setting = setting;
  out.tokens = instance.tokens;

  switch (setting.kind) {
    case SettingKind::as_is:
      break;
    case SettingKind::only:
    case SettingKind::without: {
      for (std::size_t i : masked_index_set(instance, setting))
        out.tokens[i] = specials.mask;
      break;
    }
    case SettingKind::position: {
      // Insert right-to-left so earlier span indices stay valid.
      auto spans = sorted_spans(instance, *setting.role);
      for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
        out.tokens.insert(out.tokens.begin() + static_cast<long>(it->end),
                          specials.close);
        out.tokens.insert(out.tokens.begin() + static_cast<long>(it->start),
                          specials.open);
      }
      break;
    }
  }
  return out;
}

std::vector<std::string> strip_markers(const std::vector<std::string>& tokens,
                                       const SpecialTokens& specials) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens)
    if (t != specials.open && t != specials.close) out.push_back(t);
  return out;
}

std::vector<TransformedInstance> transform_corpus(const Corpus& corpus,
                                                  const Setting& setting,
                                                  const SpecialTokens& specials,
                                                  AbsentPolicy absent_policy,
                                                  TransformReport* report) {
  validate(setting);
  {
    std::unordered_set<std::string> vocab;
    for (const auto& inst : corpus.instances)
      vocab.insert(inst.tokens.begin(), inst.tokens.end());
    for (const std::string* t : {&specials.mask, &specials.open, &specials.close})
      if (vocab.count(*t))
        throw CorpusError("special token '" + *t +
                          "' occurs in the corpus vocabulary");
  }

  std::vector<const AnnotatedInstance*> selected;
  std::size_t dropped = 0;
  for (const auto& inst : corpus.instances) {
    if (setting.kind != SettingKind::as_is &&
        absent_policy == AbsentPolicy::drop &&
        !inst.has_role_spans(*setting.role)) {
      ++dropped;
      continue;
    }
    selected.push_back(&inst);
  }

  std::vector<TransformedInstance> out(selected.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(selected.size()); ++i)
    out[static_cast<std::size_t>(i)] =
        apply_setting(*selected[static_cast<std::size_t>(i)], setting, specials);

  if (report) report->dropped = dropped;
  return out;
}

void save_transformed(const std::vector<TransformedInstance>& instances,
                      const Setting& setting, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write file: " + path);
  for (const auto& inst : instances) {
    nlohmann::ordered_json j;
    j["id"] = inst.source_id;
    j["tokens"] = inst.tokens;
    j["label"] = inst.label;
    out << j.dump() << "\n";
  }
  nlohmann::ordered_json meta;
  meta["setting"]["kind"] = setting_kind_name(setting.kind);
  meta["setting"]["role"] =
      setting.role ? nlohmann::ordered_json(role_name(*setting.role))
                   : nlohmann::ordered_json(nullptr);
  std::ofstream meta_out(path + ".meta.json");
  if (!meta_out) throw CorpusError("cannot write file: " + path + ".meta.json");
  meta_out << meta.dump(2) << "\n";
}

}  // namespace rolemask
