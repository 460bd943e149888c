#ifndef ROLEMASK_METRICS_HPP
#define ROLEMASK_METRICS_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace rolemask {

struct ConfusionMatrix {
  std::vector<std::string> label_set;
  // counts[gold][pred], indexed by label_set order.
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t index_of(const std::string& label) const;  // throws on unknown
};

ConfusionMatrix confusion(const std::vector<std::string>& gold,
                          const std::vector<std::string>& pred,
                          const std::vector<std::string>& label_set);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Macro-averaged precision/recall/F1 with the zero conventions: a label
// with no predicted instances has precision 0, one with no gold instances
// has recall 0, and F1 is 0 when P + R is 0. The macro mean runs over the
// whole label_set, absent labels included.
struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, PRF> per_label;
};

MacroScores macro_prf(const ConfusionMatrix& matrix);

}  // namespace rolemask

#endif
