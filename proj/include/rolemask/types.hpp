#ifndef ROLEMASK_TYPES_HPP
#define ROLEMASK_TYPES_HPP

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rolemask {

// Error raised by corpus loading and validation. Messages carry the file
// line or instance id where the problem sits.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RoleKind { experiencer, cue, target, stimulus };

inline constexpr std::array<RoleKind, 4> kAllRoles = {
    RoleKind::experiencer, RoleKind::cue, RoleKind::target, RoleKind::stimulus};

const std::string& role_name(RoleKind r);
std::optional<RoleKind> role_from_name(const std::string& name);

// Token span, 0-based, end exclusive.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool operator==(const Span&) const = default;
};

struct AnnotatedInstance {
  std::string id;
  std::vector<std::string> tokens;
  std::string raw_label;  // label before any mapping
  std::string label;
  std::map<RoleKind, std::vector<Span>> roles;
  // Set by adapters when the source assigns several labels; the canonical
  // format keeps exactly one, so the flag never round-trips through JSONL.
  bool multi_label = false;

  bool has_role_spans(RoleKind r) const {
    auto it = roles.find(r);
    return it != roles.end() && !it->second.empty();
  }
  const std::vector<Span>* spans_of(RoleKind r) const {
    auto it = roles.find(r);
    return it == roles.end() ? nullptr : &it->second;
  }

  bool operator==(const AnnotatedInstance& o) const {
    return id == o.id && tokens == o.tokens && label == o.label &&
           roles == o.roles;
  }
};

struct Corpus {
  std::string name;
  std::vector<std::string> label_set;  // sorted, unique
  std::vector<AnnotatedInstance> instances;

  bool operator==(const Corpus& o) const {
    return label_set == o.label_set && instances == o.instances;
  }
};

// Throws CorpusError naming the offending instance when an invariant fails:
// non-empty tokens, spans in bounds, no overlap within one role, labels in
// label_set, unique ids.
void validate(const Corpus& corpus);
void validate(const AnnotatedInstance& inst);

// Rebuilds label_set from the instances (sorted, unique).
void refresh_label_set(Corpus& corpus);

enum class LabelPolicy { error, drop, pass };

struct LabelMap {
  std::map<std::string, std::string> map;
  LabelPolicy policy = LabelPolicy::error;

  static LabelMap load(const std::string& path);
};

struct RoleStats {
  std::size_t instances_with_role = 0;  // at least one span
  std::size_t filler_count = 0;         // number of spans
  double mean_filler_length = 0.0;      // tokens per span
};

struct CorpusStats {
  std::size_t instance_count = 0;
  double mean_instance_length = 0.0;
  // Roles with zero fillers are absent from the map (rendered as a dash).
  std::map<RoleKind, RoleStats> roles;
};

}  // namespace rolemask

#endif
