#ifndef ROLEMASK_ANALYSIS_HPP
#define ROLEMASK_ANALYSIS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rolemask/types.hpp"

namespace rolemask {

// Most frequent tokens inside spans of one role, sorted by descending count
// with lexicographic tie-breaks. Case folding (ASCII) is on by default.
struct TokenFrequency {
  RoleKind role = RoleKind::experiencer;
  std::vector<std::pair<std::string, std::size_t>> entries;
};

TokenFrequency top_role_tokens(const Corpus& corpus, RoleKind role,
                               std::size_t k, bool case_fold = true,
                               const std::set<std::string>& stoplist = {});

// Label distribution of the instances containing a token, next to the
// corpus-wide prior over the same emotion subset. Fractions are relative to
// all containing instances, so labels outside the subset form an implicit
// remainder. Containment is exact token match after folding.
struct EmotionDistribution {
  std::string token;
  std::map<std::string, double> fractions;
  std::map<std::string, double> prior;
  std::size_t support = 0;      // instances containing the token
  std::size_t corpus_size = 0;  // all instances
};

EmotionDistribution emotion_distribution(const Corpus& corpus,
                                         const std::string& token,
                                         const std::vector<std::string>& emotions,
                                         bool case_fold = true);

// An instance the model gets wrong on the untouched text but right when at
// least one role is masked out.
struct DisagreementExample {
  std::string id;
  std::string gold;
  std::string as_is_pred;
  std::map<RoleKind, std::string> without_pred;

  bool operator==(const DisagreementExample&) const = default;
};

// All maps must share one id key set; the result is sorted by id.
std::vector<DisagreementExample> mine_disagreements(
    const std::map<std::string, std::string>& gold,
    const std::map<std::string, std::string>& as_is_pred,
    const std::map<RoleKind, std::map<std::string, std::string>>& without_pred);

std::string frequency_tsv(const TokenFrequency& freq);
nlohmann::ordered_json frequency_json(const TokenFrequency& freq);
std::string distribution_tsv(const EmotionDistribution& dist,
                             const std::vector<std::string>& emotions);
nlohmann::ordered_json distribution_json(const EmotionDistribution& dist);
nlohmann::ordered_json disagreements_json(
    const std::vector<DisagreementExample>& examples);

// Grouped-bar chart of one or more token distributions next to the corpus
// prior ("overall" group), written as a standalone SVG file.
void write_distribution_svg(const std::vector<EmotionDistribution>& dists,
                            const std::vector<std::string>& emotions,
                            const std::string& path);

}  // namespace rolemask

#endif
