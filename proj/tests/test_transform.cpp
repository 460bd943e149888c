#include "rolemask/transform.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "rolemask/rng.hpp"
#include "rolemask/types.hpp"
#include "test_util.hpp"

using namespace rolemask;
using testutil::contains;
using testutil::make_corpus;
using testutil::make_instance;
using testutil::message_of;

namespace {

// The worked example sentence used throughout: every role annotated, so all
// ten setting renderings below can be checked against it.
AnnotatedInstance example_sentence() {
  return make_instance(
      "ex", {"John", "hates", "cars", "because", "they", "pollute", "the",
             "environment"},
      "anger",
      {{RoleKind::experiencer, {Span{0, 1}}},
       {RoleKind::cue, {Span{1, 2}}},
       {RoleKind::target, {Span{2, 3}}},
       {RoleKind::stimulus, {Span{5, 8}}}});
}

std::vector<std::string> render(const Setting& setting) {
  return apply_setting(example_sentence(), setting, SpecialTokens{}).tokens;
}

}  // namespace

TEST_SUITE("transform") {

TEST_CASE("setting ids round-trip through from_id") {
  CHECK_EQ(Setting::as_is().id(), "as_is");
  CHECK_EQ(Setting::only(RoleKind::cue).id(), "only_cue");
  CHECK_EQ(Setting::without(RoleKind::stimulus).id(), "without_stimulus");
  CHECK_EQ(Setting::position(RoleKind::experiencer).id(),
           "position_experiencer");

  for (const Setting& s :
       {Setting::as_is(), Setting::only(RoleKind::experiencer),
        Setting::without(RoleKind::target), Setting::position(RoleKind::cue)}) {
    auto parsed = Setting::from_id(s.id());
    REQUIRE(parsed.has_value());
    CHECK_EQ(*parsed, s);
  }

  for (const char* bad : {"", "only", "only_", "without_banana", "foo_cue",
                          "as_is_cue", "ONLY_CUE"})
    CHECK_FALSE(Setting::from_id(bad).has_value());
}

TEST_CASE("setting validation enforces the role rule") {
  CHECK_NOTHROW(validate(Setting::as_is()));
  CHECK_NOTHROW(validate(Setting::only(RoleKind::cue)));
  CHECK_THROWS_AS(validate(Setting{SettingKind::without, std::nullopt}),
                  ConfigError);
  CHECK_THROWS_AS(validate(Setting{SettingKind::as_is, RoleKind::cue}),
                  ConfigError);
}

TEST_CASE("special tokens must be distinct and non-empty") {
  CHECK_NOTHROW(SpecialTokens("M", "<", ">"));
  CHECK_THROWS_AS(SpecialTokens("", "<", ">"), ConfigError);
  CHECK_THROWS_AS(SpecialTokens("X", "X", ">"), ConfigError);
  CHECK_THROWS_AS(SpecialTokens("X", "<", "<"), ConfigError);
}

TEST_CASE("golden renderings of the example sentence") {
  using V = std::vector<std::string>;
  // Row 1: untouched input.
  CHECK_EQ(render(Setting::as_is()),
           V{"John", "hates", "cars", "because", "they", "pollute", "the",
             "environment"});
  // Rows 2-4: everything outside the kept role is masked.
  CHECK_EQ(render(Setting::only(RoleKind::stimulus)),
           V{"X", "X", "X", "X", "X", "pollute", "the", "environment"});
  CHECK_EQ(render(Setting::only(RoleKind::experiencer)),
           V{"John", "X", "X", "X", "X", "X", "X", "X"});
  CHECK_EQ(render(Setting::only(RoleKind::target)),
           V{"X", "X", "cars", "X", "X", "X", "X", "X"});
  // Rows 5-7: the role itself is masked.
  CHECK_EQ(render(Setting::without(RoleKind::stimulus)),
           V{"John", "hates", "cars", "because", "they", "X", "X", "X"});
  CHECK_EQ(render(Setting::without(RoleKind::experiencer)),
           V{"X", "hates", "cars", "because", "they", "pollute", "the",
             "environment"});
  CHECK_EQ(render(Setting::without(RoleKind::target)),
           V{"John", "hates", "X", "because", "they", "pollute", "the",
             "environment"});
  // Rows 8-10: markers around the role span, nothing masked.
  CHECK_EQ(render(Setting::position(RoleKind::stimulus)),
           V{"John", "hates", "cars", "because", "they", "⌊", "pollute", "the",
             "environment", "⌉"});
  CHECK_EQ(render(Setting::position(RoleKind::experiencer)),
           V{"⌊", "John", "⌉", "hates", "cars", "because", "they", "pollute",
             "the", "environment"});
  CHECK_EQ(render(Setting::position(RoleKind::target)),
           V{"John", "hates", "⌊", "cars", "⌉", "because", "they", "pollute",
             "the", "environment"});
}

TEST_CASE("apply_setting carries id and label through") {
  auto out = apply_setting(example_sentence(), Setting::only(RoleKind::cue),
                           SpecialTokens{});
  CHECK_EQ(out.source_id, "ex");
  CHECK_EQ(out.label, "anger");
  CHECK_EQ(out.setting, Setting::only(RoleKind::cue));
}

TEST_CASE("multi-span roles mask and mark every span") {
  auto inst = make_instance(
      "m", {"a", "b", "c", "d", "e", "f"}, "l",
      {{RoleKind::stimulus, {Span{4, 6}, Span{0, 1}}}});  // given out of order
  SpecialTokens sp;
  CHECK_EQ(apply_setting(inst, Setting::without(RoleKind::stimulus), sp).tokens,
           std::vector<std::string>{"X", "b", "c", "d", "X", "X"});
  CHECK_EQ(apply_setting(inst, Setting::only(RoleKind::stimulus), sp).tokens,
           std::vector<std::string>{"a", "X", "X", "X", "e", "f"});
  // Right-to-left insertion keeps earlier offsets valid; one pair per span.
  CHECK_EQ(apply_setting(inst, Setting::position(RoleKind::stimulus), sp).tokens,
           std::vector<std::string>{"⌊", "a", "⌉", "b", "c", "d", "⌊", "e", "f",
                                    "⌉"});
}

TEST_CASE("roles absent from an instance degrade as documented") {
  auto inst = make_instance("n", {"a", "b"}, "l");
  SpecialTokens sp;
  // without: nothing to remove. only: nothing to keep. position: no markers.
  CHECK_EQ(apply_setting(inst, Setting::without(RoleKind::cue), sp).tokens,
           std::vector<std::string>{"a", "b"});
  CHECK_EQ(apply_setting(inst, Setting::only(RoleKind::cue), sp).tokens,
           std::vector<std::string>{"X", "X"});
  CHECK_EQ(apply_setting(inst, Setting::position(RoleKind::cue), sp).tokens,
           std::vector<std::string>{"a", "b"});
}

TEST_CASE("masked_index_set splits indices between only and without") {
  auto inst = example_sentence();
  auto without = masked_index_set(inst, Setting::without(RoleKind::stimulus));
  auto only = masked_index_set(inst, Setting::only(RoleKind::stimulus));
  CHECK_EQ(without, std::set<std::size_t>{5, 6, 7});
  CHECK_EQ(only, std::set<std::size_t>{0, 1, 2, 3, 4});

  CHECK_THROWS_AS(masked_index_set(inst, Setting::as_is()),
                  std::invalid_argument);
  CHECK_THROWS_AS(masked_index_set(inst, Setting::position(RoleKind::cue)),
                  std::invalid_argument);
}

TEST_CASE("strip_markers removes exactly the marker tokens") {
  SpecialTokens sp;
  auto marked = apply_setting(example_sentence(),
                              Setting::position(RoleKind::stimulus), sp);
  CHECK_EQ(strip_markers(marked.tokens, sp), example_sentence().tokens);
  // The mask token is content, not a marker.
  CHECK_EQ(strip_markers({"X", "⌊", "a", "⌉"}, sp),
           std::vector<std::string>{"X", "a"});
}

TEST_CASE("fuzzed instances satisfy the transformation invariants") {
  Rng rng(2024);
  SpecialTokens sp;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i)
      tokens.push_back("w" + std::to_string(rng.uniform_index(50)));
    std::map<RoleKind, std::vector<Span>> roles;
    for (RoleKind role : kAllRoles) {
      if (rng.bernoulli(0.3)) continue;
      // A few non-overlapping spans per role.
      std::vector<Span> spans;
      std::size_t at = rng.uniform_index(n);
      while (at < n && spans.size() < 3) {
        std::size_t end = std::min(n, at + 1 + rng.uniform_index(4));
        spans.push_back(Span{at, end});
        at = end + rng.uniform_index(4);
      }
      if (rng.bernoulli(0.5)) std::reverse(spans.begin(), spans.end());
      if (!spans.empty()) roles[role] = spans;
    }
    auto inst = make_instance("f" + std::to_string(trial), tokens, "l", roles);
    validate(inst);

    for (RoleKind role : kAllRoles) {
      auto only = masked_index_set(inst, Setting::only(role));
      auto without = masked_index_set(inst, Setting::without(role));
      // Footprints are complementary and disjoint.
      CHECK_EQ(only.size() + without.size(), n);
      for (std::size_t i : only) CHECK_FALSE(without.count(i));

      // Masking preserves length; position adds one marker pair per span.
      auto only_out = apply_setting(inst, Setting::only(role), sp);
      auto without_out = apply_setting(inst, Setting::without(role), sp);
      CHECK_EQ(only_out.tokens.size(), n);
      CHECK_EQ(without_out.tokens.size(), n);
      auto pos_out = apply_setting(inst, Setting::position(role), sp);
      const std::size_t n_spans = roles.count(role) ? roles[role].size() : 0;
      CHECK_EQ(pos_out.tokens.size(), n + 2 * n_spans);
      CHECK_EQ(strip_markers(pos_out.tokens, sp), tokens);

      // Masked positions hold the mask token, the rest the source token.
      for (std::size_t i = 0; i < n; ++i) {
        if (without.count(i))
          CHECK_EQ(without_out.tokens[i], sp.mask);
        else
          CHECK_EQ(without_out.tokens[i], tokens[i]);
      }
    }
  }
}

TEST_CASE("transform_corpus applies the absent-instance policy") {
  Corpus corpus = make_corpus({
      make_instance("a", {"x", "y"}, "l", {{RoleKind::cue, {Span{0, 1}}}}),
      make_instance("b", {"z"}, "l"),
  });
  TransformReport report;
  auto kept = transform_corpus(corpus, Setting::without(RoleKind::cue),
                               SpecialTokens{}, AbsentPolicy::keep, &report);
  CHECK_EQ(kept.size(), 2);
  CHECK_EQ(report.dropped, 0);

  auto dropped = transform_corpus(corpus, Setting::without(RoleKind::cue),
                                  SpecialTokens{}, AbsentPolicy::drop, &report);
  REQUIRE_EQ(dropped.size(), 1);
  CHECK_EQ(dropped[0].source_id, "a");
  CHECK_EQ(report.dropped, 1);

  // as_is never drops anything.
  auto as_is = transform_corpus(corpus, Setting::as_is(), SpecialTokens{},
                                AbsentPolicy::drop, &report);
  CHECK_EQ(as_is.size(), 2);
  CHECK_EQ(report.dropped, 0);
}

TEST_CASE("transform_corpus rejects specials already in the vocabulary") {
  Corpus corpus = make_corpus({make_instance("a", {"X", "y"}, "l")});
  auto msg = message_of<CorpusError>([&] {
    transform_corpus(corpus, Setting::as_is(), SpecialTokens{});
  });
  CHECK(contains(msg, "special token 'X'"));
}

TEST_CASE("save_transformed writes instances plus a setting sidecar") {
  testutil::TempDir dir("transform-save");
  Corpus corpus = make_corpus(
      {make_instance("a", {"x", "y"}, "l", {{RoleKind::cue, {Span{0, 1}}}})});
  auto out = transform_corpus(corpus, Setting::without(RoleKind::cue),
                              SpecialTokens{});
  const std::string path = dir.file("t.jsonl");
  save_transformed(out, Setting::without(RoleKind::cue), path);

  std::ifstream lines(path);
  std::string line;
  REQUIRE(std::getline(lines, line));
  auto j = nlohmann::json::parse(line);
  CHECK_EQ(j["id"], "a");
  CHECK_EQ(j["tokens"], nlohmann::json::array({"X", "y"}));

  std::ifstream meta_in(path + ".meta.json");
  nlohmann::json meta;
  meta_in >> meta;
  CHECK_EQ(meta["setting"]["kind"], "without");
  CHECK_EQ(meta["setting"]["role"], "cue");
}

}  // TEST_SUITE
