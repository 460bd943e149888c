#include "rolemask/analysis.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "rolemask/types.hpp"
#include "test_util.hpp"

using namespace rolemask;
using testutil::contains;
using testutil::make_corpus;
using testutil::make_instance;

namespace {

// Target-annotated instances whose target token is drawn from a small pool,
// so frequencies have known counts.
Corpus target_corpus() {
  std::vector<AnnotatedInstance> instances;
  const char* names[] = {"Obama", "Obama", "obama", "Trump", "Trump", "media"};
  const char* labels[] = {"anger", "fear", "anger", "anger", "joy", "anger"};
  for (std::size_t i = 0; i < 6; ++i) {
    instances.push_back(make_instance(
        "t" + std::to_string(i), {"about", names[i], "again"}, labels[i],
        {{RoleKind::target, {Span{1, 2}}}}));
  }
  return make_corpus(std::move(instances), "targets");
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("top_role_tokens counts folded tokens inside role spans") {
  TokenFrequency freq = top_role_tokens(target_corpus(), RoleKind::target, 10);
  REQUIRE_EQ(freq.entries.size(), 3);
  CHECK_EQ(freq.entries[0].first, "obama");  // 2x "Obama" + 1x "obama"
  CHECK_EQ(freq.entries[0].second, 3);
  CHECK_EQ(freq.entries[1].first, "trump");
  CHECK_EQ(freq.entries[1].second, 2);
  CHECK_EQ(freq.entries[2].first, "media");
  CHECK_EQ(freq.entries[2].second, 1);
  CHECK_EQ(freq.role, RoleKind::target);

  // Without folding the capitalized variants stay separate.
  TokenFrequency exact =
      top_role_tokens(target_corpus(), RoleKind::target, 10, false);
  REQUIRE_EQ(exact.entries.size(), 4);
  CHECK_EQ(exact.entries[0].first, "Obama");
  CHECK_EQ(exact.entries[0].second, 2);

  // k truncates; ties break lexicographically.
  TokenFrequency top1 = top_role_tokens(target_corpus(), RoleKind::target, 1);
  REQUIRE_EQ(top1.entries.size(), 1);
  CHECK_EQ(top1.entries[0].first, "obama");

  CHECK_THROWS_AS(top_role_tokens(target_corpus(), RoleKind::target, 0),
                  std::invalid_argument);
  // A role with no spans anywhere warns and returns nothing.
  CHECK(top_role_tokens(target_corpus(), RoleKind::cue, 5).entries.empty());
}

TEST_CASE("top_role_tokens honours the stoplist") {
  TokenFrequency freq = top_role_tokens(target_corpus(), RoleKind::target, 10,
                                        true, {"obama"});
  REQUIRE_EQ(freq.entries.size(), 2);
  CHECK_EQ(freq.entries[0].first, "trump");
}

TEST_CASE("emotion_distribution reports fractions, prior, and support") {
  Corpus corpus = target_corpus();
  EmotionDistribution dist = emotion_distribution(
      corpus, "Obama", {"anger", "fear", "joy"});  // folded match
  CHECK_EQ(dist.token, "Obama");
  CHECK_EQ(dist.support, 3);
  CHECK_EQ(dist.corpus_size, 6);
  CHECK_EQ(dist.fractions.at("anger"), doctest::Approx(2.0 / 3.0));
  CHECK_EQ(dist.fractions.at("fear"), doctest::Approx(1.0 / 3.0));
  CHECK_EQ(dist.fractions.at("joy"), doctest::Approx(0.0));
  // Prior over the whole corpus: anger 4/6, fear 1/6, joy 1/6.
  CHECK_EQ(dist.prior.at("anger"), doctest::Approx(4.0 / 6.0));
  CHECK_EQ(dist.prior.at("fear"), doctest::Approx(1.0 / 6.0));
  CHECK_EQ(dist.prior.at("joy"), doctest::Approx(1.0 / 6.0));

  CHECK_THROWS_AS(emotion_distribution(corpus, "", {"anger"}),
                  std::invalid_argument);
  // Unknown token: zero support, zero fractions, prior still filled.
  EmotionDistribution none =
      emotion_distribution(corpus, "nobody", {"anger"});
  CHECK_EQ(none.support, 0);
  CHECK_EQ(none.fractions.at("anger"), 0.0);
}

TEST_CASE("per-token fractions reconstruct the prior when weighted by support") {
  // Property: summing fraction * support over a token partition of the
  // corpus recovers prior * corpus_size per emotion. The targets partition
  // the corpus (every instance has exactly one target token).
  Corpus corpus = target_corpus();
  const std::vector<std::string> emotions = {"anger", "fear", "joy"};
  std::map<std::string, double> recovered;
  for (const std::string& token : {"obama", "trump", "media"}) {
    EmotionDistribution dist = emotion_distribution(corpus, token, emotions);
    for (const auto& [emotion, fraction] : dist.fractions)
      recovered[emotion] += fraction * static_cast<double>(dist.support);
  }
  EmotionDistribution any = emotion_distribution(corpus, "obama", emotions);
  for (const std::string& emotion : emotions)
    CHECK_EQ(recovered[emotion],
             doctest::Approx(any.prior.at(emotion) *
                             static_cast<double>(any.corpus_size)));
}

TEST_CASE("mine_disagreements keeps as_is misses that a masking fixes") {
  std::map<std::string, std::string> gold = {
      {"a", "joy"}, {"b", "fear"}, {"c", "anger"}, {"d", "joy"}};
  std::map<std::string, std::string> as_is = {
      {"a", "joy"}, {"b", "anger"}, {"c", "fear"}, {"d", "anger"}};
  std::map<RoleKind, std::map<std::string, std::string>> without;
  without[RoleKind::experiencer] = {
      {"a", "joy"}, {"b", "fear"}, {"c", "fear"}, {"d", "fear"}};
  without[RoleKind::target] = {
      {"a", "fear"}, {"b", "anger"}, {"c", "anger"}, {"d", "fear"}};

  auto examples = mine_disagreements(gold, as_is, without);
  // a: as_is correct -> excluded. b: fixed by without experiencer.
  // c: fixed by without target. d: wrong everywhere -> excluded.
  REQUIRE_EQ(examples.size(), 2);
  CHECK_EQ(examples[0].id, "b");
  CHECK_EQ(examples[0].gold, "fear");
  CHECK_EQ(examples[0].as_is_pred, "anger");
  CHECK_EQ(examples[0].without_pred.at(RoleKind::experiencer), "fear");
  CHECK_EQ(examples[1].id, "c");
  CHECK_EQ(examples[1].without_pred.at(RoleKind::target), "anger");
}

TEST_CASE("mine_disagreements insists on matching id sets") {
  std::map<std::string, std::string> gold = {{"a", "joy"}};
  std::map<std::string, std::string> as_is = {{"a", "joy"}, {"b", "joy"}};
  std::map<RoleKind, std::map<std::string, std::string>> without;
  without[RoleKind::cue] = {{"a", "joy"}};
  CHECK_THROWS_AS(mine_disagreements(gold, as_is, without),
                  std::invalid_argument);
  as_is = {{"x", "joy"}};
  CHECK_THROWS_AS(mine_disagreements(gold, as_is, without),
                  std::invalid_argument);
}

TEST_CASE("frequency and distribution exports render both formats") {
  TokenFrequency freq = top_role_tokens(target_corpus(), RoleKind::target, 2);
  const std::string tsv = frequency_tsv(freq);
  CHECK(contains(tsv, "token\tcount"));
  CHECK(contains(tsv, "obama\t3"));
  auto j = frequency_json(freq);
  CHECK_EQ(j["role"], "target");
  CHECK_EQ(j["entries"][0]["token"], "obama");
  CHECK_EQ(j["entries"][0]["count"], 3);

  EmotionDistribution dist = emotion_distribution(
      target_corpus(), "obama", {"anger", "fear", "joy"});
  const std::string dtsv = distribution_tsv(dist, {"anger", "fear", "joy"});
  CHECK(contains(dtsv, "anger"));
  auto dj = distribution_json(dist);
  CHECK_EQ(dj["token"], "obama");
  CHECK_EQ(dj["support"], 3);

  auto examples = mine_disagreements(
      {{"a", "joy"}}, {{"a", "fear"}},
      {{RoleKind::cue, {{"a", "joy"}}}});
  auto ej = disagreements_json(examples);
  REQUIRE_EQ(ej.size(), 1);
  CHECK_EQ(ej[0]["id"], "a");
  CHECK_EQ(ej[0]["gold"], "joy");
  CHECK_EQ(ej[0]["as_is"], "fear");
  CHECK_EQ(ej[0]["without"]["without_cue"], "joy");
}

TEST_CASE("write_distribution_svg emits a parseable grouped chart") {
  testutil::TempDir dir("analysis-svg");
  Corpus corpus = target_corpus();
  const std::vector<std::string> emotions = {"anger", "fear", "joy"};
  std::vector<EmotionDistribution> dists = {
      emotion_distribution(corpus, "obama", emotions),
      emotion_distribution(corpus, "trump", emotions)};
  const std::string path = dir.file("dist.svg");
  write_distribution_svg(dists, emotions, path);

  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string svg = buffer.str();
  CHECK(contains(svg, "<svg"));
  CHECK(contains(svg, "</svg>"));
  CHECK(contains(svg, "overall"));
  CHECK(contains(svg, "obama"));
  CHECK(contains(svg, "trump"));

  CHECK_THROWS_AS(
      write_distribution_svg(dists, emotions, "/nonexistent-dir/x.svg"),
      CorpusError);
}

}  // TEST_SUITE
