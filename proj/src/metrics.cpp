#include "rolemask/metrics.hpp"

#include <stdexcept>

namespace rolemask {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts)
    for (std::size_t c : row) n += c;
  return n;
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < label_set.size(); ++i)
    if (label_set[i] == label) return i;
  throw std::invalid_argument("label '" + label + "' not in label set");
}

ConfusionMatrix confusion(const std::vector<std::string>& gold,
                          const std::vector<std::string>& pred,
                          const std::vector<std::string>& label_set) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("gold/pred length mismatch");
  ConfusionMatrix m;
  m.label_set = label_set;
  m.counts.assign(label_set.size(),
                  std::vector<std::size_t>(label_set.size(), 0));
  for (std::size_t i = 0; i < gold.size(); ++i)
    m.counts[m.index_of(gold[i])][m.index_of(pred[i])] += 1;
  return m;
}

MacroScores macro_prf(const ConfusionMatrix& matrix) {
  const std::size_t n = matrix.label_set.size();
  MacroScores out;
  if (n == 0) return out;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t tp = matrix.counts[k][k];
    std::size_t fp = 0, fn = 0;
    for (std::size_t g = 0; g < n; ++g)
      if (g != k) fp += matrix.counts[g][k];
    for (std::size_t p = 0; p < n; ++p)
      if (p != k) fn += matrix.counts[k][p];
    PRF s;
    s.precision = (tp + fp) == 0 ? 0.0
                                 : static_cast<double>(tp) /
                                       static_cast<double>(tp + fp);
    s.recall = (tp + fn) == 0
                   ? 0.0
                   : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    out.per_label[matrix.label_set[k]] = s;
    out.precision += s.precision;
    out.recall += s.recall;
    out.f1 += s.f1;
  }
  out.precision /= static_cast<double>(n);
  out.recall /= static_cast<double>(n);
  out.f1 /= static_cast<double>(n);
  return out;
}

}  // namespace rolemask
