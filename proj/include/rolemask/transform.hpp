#ifndef ROLEMASK_TRANSFORM_HPP
#define ROLEMASK_TRANSFORM_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rolemask/types.hpp"

namespace rolemask {

enum class SettingKind { as_is, only, without, position };

const std::string& setting_kind_name(SettingKind k);
std::optional<SettingKind> setting_kind_from_name(const std::string& name);

// One experimental input setting. as_is carries no role; the other three
// carry exactly one.
struct Setting {
  SettingKind kind = SettingKind::as_is;
  std::optional<RoleKind> role;

  static Setting as_is() { return {}; }
  static Setting only(RoleKind r) { return {SettingKind::only, r}; }
  static Setting without(RoleKind r) { return {SettingKind::without, r}; }
  static Setting position(RoleKind r) { return {SettingKind::position, r}; }

  // e.g. "as_is", "without_stimulus"; used for file names and result keys.
  std::string id() const;
  // Inverse of id(); nullopt for anything unparseable.
  static std::optional<Setting> from_id(const std::string& id);
  bool operator==(const Setting&) const = default;
  bool operator<(const Setting& o) const {
    if (kind != o.kind) return kind < o.kind;
    return role < o.role;
  }
};

void validate(const Setting& setting);

// The mask and marker tokens added to the input. Construction checks the
// three are distinct and non-empty; transform_corpus additionally rejects
// tokens that occur in the corpus vocabulary.
struct SpecialTokens {
  std::string mask = "X";
  std::string open = "⌊";   // left floor bracket
  std::string close = "⌉";  // right ceiling bracket

  SpecialTokens() = default;
  SpecialTokens(std::string mask_tok, std::string open_tok,
                std::string close_tok);
};

struct TransformedInstance {
  std::string source_id;
  std::vector<std::string> tokens;
  std::string label;
  Setting setting;

  bool operator==(const TransformedInstance&) const = default;
};

// Applies one input setting to an instance:
//   as_is      unchanged tokens
//   without(r) one mask token per source token inside any span of r
//   only(r)    one mask token per source token outside all spans of r
//   position(r) open marker before and close marker after each span of r,
//               inserted right-to-left; no masking
TransformedInstance apply_setting(const AnnotatedInstance& instance,
                                  const Setting& setting,
                                  const SpecialTokens& specials);

// The exact token indices apply_setting would replace. Defined for only and
// without; throws std::invalid_argument otherwise.
std::set<std::size_t> masked_index_set(const AnnotatedInstance& instance,
                                       const Setting& setting);

// Removes marker tokens, preserving everything else in order.
std::vector<std::string> strip_markers(const std::vector<std::string>& tokens,
                                       const SpecialTokens& specials);

enum class AbsentPolicy { keep, drop };

struct TransformReport {
  std::size_t dropped = 0;  // instances lacking the setting's role
};

// Applies the setting to every instance. Under AbsentPolicy::drop,
// instances with no span of the setting's role are excluded; under keep they
// pass through (which masks every token under only). Throws CorpusError if
// a special token already occurs in the corpus vocabulary.
std::vector<TransformedInstance> transform_corpus(
    const Corpus& corpus, const Setting& setting, const SpecialTokens& specials,
    AbsentPolicy absent_policy = AbsentPolicy::keep,
    TransformReport* report = nullptr);

// Canonical JSONL export of transformed instances plus the sidecar metadata
// object {"setting": {"kind": ..., "role": ...}} at <path>.meta.json.
void save_transformed(const std::vector<TransformedInstance>& instances,
                      const Setting& setting, const std::string& path);

}  // namespace rolemask

#endif
