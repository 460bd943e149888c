#include "rolemask/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rolemask {

namespace {

std::string fold(const std::string& token, bool case_fold) {
  if (!case_fold) return token;
  std::string out = token;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

TokenFrequency top_role_tokens(const Corpus& corpus, RoleKind role,
                               std::size_t k, bool case_fold,
                               const std::set<std::string>& stoplist) {
  if (k == 0) throw std::invalid_argument("top_role_tokens: k must be >= 1");
  std::map<std::string, std::size_t> counts;
  bool role_seen = false;
  for (const AnnotatedInstance& inst : corpus.instances) {
    const std::vector<Span>* spans = inst.spans_of(role);
    if (!spans) continue;
    for (const Span& span : *spans) {
      role_seen = true;
      for (std::size_t t = span.start; t < span.end; ++t) {
        const std::string token = fold(inst.tokens[t], case_fold);
        if (!stoplist.count(token)) ++counts[token];
      }
    }
  }
  if (!role_seen)
    std::cerr << "warning: role '" << role_name(role)
              << "' has no spans in corpus '" << corpus.name << "'\n";

  TokenFrequency freq;
  freq.role = role;
  freq.entries.assign(counts.begin(), counts.end());
  // Descending count; the map already delivers lexicographic order within
  // equal counts, and stable_sort keeps it.
  std::stable_sort(freq.entries.begin(), freq.entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (freq.entries.size() > k) freq.entries.resize(k);
  return freq;
}

EmotionDistribution emotion_distribution(const Corpus& corpus,
                                         const std::string& token,
                                         const std::vector<std::string>& emotions,
                                         bool case_fold) {
  if (token.empty())
    throw std::invalid_argument("emotion_distribution: empty token");
  const std::string needle = fold(token, case_fold);

  EmotionDistribution dist;
  dist.token = token;
  dist.corpus_size = corpus.instances.size();
  std::map<std::string, std::size_t> with_token, overall;
  for (const AnnotatedInstance& inst : corpus.instances) {
    ++overall[inst.label];
    const bool contains =
        std::any_of(inst.tokens.begin(), inst.tokens.end(),
                    [&](const std::string& t) { return fold(t, case_fold) == needle; });
    if (contains) {
      ++with_token[inst.label];
      ++dist.support;
    }
  }
  if (dist.support == 0)
    std::cerr << "warning: token '" << token << "' occurs in no instance of '"
              << corpus.name << "'\n";

  for (const std::string& emotion : emotions) {
    dist.fractions[emotion] =
        dist.support == 0
            ? 0.0
            : static_cast<double>(with_token[emotion]) /
                  static_cast<double>(dist.support);
    dist.prior[emotion] = corpus.instances.empty()
                              ? 0.0
                              : static_cast<double>(overall[emotion]) /
                                    static_cast<double>(corpus.instances.size());
  }
  return dist;
}

std::vector<DisagreementExample> mine_disagreements(
    const std::map<std::string, std::string>& gold,
    const std::map<std::string, std::string>& as_is_pred,
    const std::map<RoleKind, std::map<std::string, std::string>>& without_pred) {
  auto check_keys = [&](const std::map<std::string, std::string>& other,
                        const std::string& what) {
    if (other.size() != gold.size())
      throw std::invalid_argument("mine_disagreements: " + what +
                                  " id set differs from gold");
    for (const auto& [id, label] : gold)
      if (!other.count(id))
        throw std::invalid_argument("mine_disagreements: " + what +
                                    " is missing id '" + id + "'");
  };
  check_keys(as_is_pred, "as_is predictions");
  for (const auto& [role, preds] : without_pred)
    check_keys(preds, "without_" + role_name(role) + " predictions");

  std::vector<DisagreementExample> out;
  for (const auto& [id, gold_label] : gold) {
    const std::string& asis = as_is_pred.at(id);
    if (asis == gold_label) continue;
    DisagreementExample example{id, gold_label, asis, {}};
    bool any_correct = false;
    for (const auto& [role, preds] : without_pred) {
      const std::string& pred = preds.at(id);
      example.without_pred[role] = pred;
      any_correct |= pred == gold_label;
    }
    if (any_correct) out.push_back(std::move(example));
  }
  return out;  // gold map iteration order is sorted by id
}

std::string frequency_tsv(const TokenFrequency& freq) {
  std::ostringstream out;
  out << "token\tcount\n";
  for (const auto& [token, count] : freq.entries)
    out << token << '\t' << count << '\n';
  return out.str();
}

nlohmann::ordered_json frequency_json(const TokenFrequency& freq) {
  nlohmann::ordered_json entries = nlohmann::json::array();
  for (const auto& [token, count] : freq.entries)
    entries.push_back({{"token", token}, {"count", count}});
  return {{"role", role_name(freq.role)}, {"entries", entries}};
}

std::string distribution_tsv(const EmotionDistribution& dist,
                             const std::vector<std::string>& emotions) {
  std::ostringstream out;
  out << "emotion\t" << dist.token << "\toverall\n";
  for (const std::string& emotion : emotions)
    out << emotion << '\t' << dist.fractions.at(emotion) << '\t'
        << dist.prior.at(emotion) << '\n';
  return out.str();
}

nlohmann::ordered_json distribution_json(const EmotionDistribution& dist) {
  return {{"token", dist.token},
          {"support", dist.support},
          {"corpus_size", dist.corpus_size},
          {"fractions", dist.fractions},
          {"prior", dist.prior}};
}

nlohmann::ordered_json disagreements_json(
    const std::vector<DisagreementExample>& examples) {
  nlohmann::ordered_json out = nlohmann::json::array();
  for (const DisagreementExample& example : examples) {
    nlohmann::ordered_json without(nlohmann::json::value_t::object);
    for (const auto& [role, pred] : example.without_pred)
      without["without_" + role_name(role)] = pred;
    out.push_back({{"id", example.id},
                   {"gold", example.gold},
                   {"as_is", example.as_is_pred},
                   {"without", without}});
  }
  return out;
}

void write_distribution_svg(const std::vector<EmotionDistribution>& dists,
                            const std::vector<std::string>& emotions,
                            const std::string& path) {
  static const char* kPalette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                                   "#956cb4", "#8c613c", "#dc7ec0", "#797979"};
  const std::size_t n_groups = dists.size() + 1;  // +1 for the overall prior
  const double bar_w = 18.0, gap = 6.0, group_gap = 30.0;
  const double group_w = emotions.size() * (bar_w + gap) + group_gap;
  const double plot_h = 220.0, margin = 40.0;
  const double width = margin * 2 + n_groups * group_w;
  const double height = plot_h + margin * 2 + 20.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" "
      << "font-size=\"11\">\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin + plot_h << "\" x2=\""
      << width - margin << "\" y2=\"" << margin + plot_h
      << "\" stroke=\"#333\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double frac = tick / 4.0;
    const double y = margin + plot_h * (1.0 - frac);
    svg << "<line x1=\"" << margin - 4 << "\" y1=\"" << y << "\" x2=\"" << margin
        << "\" y2=\"" << y << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << margin - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\">" << frac << "</text>\n";
  }

  auto draw_group = [&](std::size_t group, const std::string& label,
                        const std::map<std::string, double>& values) {
    const double x0 = margin + group * group_w + group_gap / 2;
    for (std::size_t e = 0; e < emotions.size(); ++e) {
      const double value =
          values.count(emotions[e]) ? values.at(emotions[e]) : 0.0;
      const double h = plot_h * value;
      svg << "<rect x=\"" << x0 + e * (bar_w + gap) << "\" y=\""
          << margin + plot_h - h << "\" width=\"" << bar_w << "\" height=\"" << h
          << "\" fill=\"" << kPalette[e % 8] << "\"/>\n";
    }
    svg << "<text x=\"" << x0 + emotions.size() * (bar_w + gap) / 2 - gap / 2
        << "\" y=\"" << margin + plot_h + 16
        << "\" text-anchor=\"middle\">" << label << "</text>\n";
  };

  if (!dists.empty()) draw_group(0, "overall", dists.front().prior);
  for (std::size_t i = 0; i < dists.size(); ++i)
    draw_group(i + 1, dists[i].token, dists[i].fractions);

  // Legend along the top.
  for (std::size_t e = 0; e < emotions.size(); ++e) {
    const double x = margin + e * 90.0;
    svg << "<rect x=\"" << x << "\" y=\"10\" width=\"12\" height=\"12\" fill=\""
        << kPalette[e % 8] << "\"/>\n";
    svg << "<text x=\"" << x + 16 << "\" y=\"20\">" << emotions[e]
        << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw CorpusError(path + ": cannot open for writing");
  out << svg.str();
}

}  // namespace rolemask
