#ifndef ROLEMASK_SYNTH_HPP
#define ROLEMASK_SYNTH_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rolemask/types.hpp"

namespace rolemask {

// Recipe for a corpus whose label is a known function of one role's token:
// label index = informative token index mod |labels|, flipped to a random
// other label with probability noise. Every instance follows the template
//   [experiencer] [cue] [target] because [stimulus ...]
// with role spans recorded, so the ablation settings have known effects.
//
// confound_role plants a shortcut: that role's token index is overwritten
// with the final label index, making it a perfect predictor within the
// generated corpus. Generating train with a confound and test without one
// (same labels and vocabulary sizes, different seeds) yields the
// train-correlated / test-decorrelated pair the confounder checks use.
struct SynthSpec {
  std::size_t n_instances = 0;
  std::vector<std::string> labels;
  RoleKind informative_role = RoleKind::cue;
  std::map<RoleKind, std::size_t> vocab_sizes;  // defaults to 20 per role
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::optional<RoleKind> confound_role;
};

void validate(const SynthSpec& spec);

struct SynthReport {
  std::vector<std::string> flipped_ids;  // instances whose label was flipped
};

// Deterministic: the same spec always produces the same corpus.
Corpus generate_synthetic(const SynthSpec& spec, SynthReport* report = nullptr);

// The noise-free label an instance's informative token dictates; lets tests
// recount flips independently of the generator's own log.
std::string synth_true_label(const SynthSpec& spec,
                             const AnnotatedInstance& instance);

}  // namespace rolemask

#endif
