#include "doctest.h"
#include "tpcl/dataset.hpp"

using namespace tpcl;

TEST_SUITE("lexicon") {
  TEST_CASE("default lexicon has 65 types in four groups") {
    const auto& lex = TypeLexicon::default_lexicon();
    CHECK(lex.size() == 65);
    const auto groups = coarse_partition(lex);
    CHECK(groups.of(CoarseGroup::Wh).size() == 32);
    CHECK(groups.of(CoarseGroup::YesNo).size() == 29);
    CHECK(groups.of(CoarseGroup::Other).size() == 1);
    CHECK(groups.of(CoarseGroup::Number).size() == 3);
    REQUIRE(lex.fallback_id().has_value());
    CHECK(lex.at(*lex.fallback_id()).prefix == "none of the above");
    CHECK(lex.at(*lex.fallback_id()).group == CoarseGroup::Other);
  }

  TEST_CASE("number group holds the counting prefixes") {
    const auto& lex = TypeLexicon::default_lexicon();
    for (const char* p : {"how many", "how many people are", "how many people are in"}) {
      auto id = lex.find_prefix(p);
      REQUIRE(id.has_value());
      CHECK(lex.at(*id).group == CoarseGroup::Number);
    }
    auto how = lex.find_prefix("how");
    REQUIRE(how.has_value());
    CHECK(lex.at(*how).group == CoarseGroup::YesNo);
  }

  TEST_CASE("normalization") {
    CHECK(normalize_question("  What   COLOR is\tthe car?") == "what color is the car?");
    CHECK(normalize_question("\"Is it?") == "is it?");
  }

  TEST_CASE("longest prefix on a word boundary") {
    const auto& lex = TypeLexicon::default_lexicon();
    auto type_of = [&](const char* q) { return lex.at(infer_question_type(q, lex)).prefix; };
    CHECK(type_of("How many people are in the room?") == "how many people are in");
    CHECK(type_of("How many people are there?") == "how many people are");
    CHECK(type_of("How many dogs?") == "how many");
    CHECK(type_of("What color is the bus?") == "what color is the");
    CHECK(type_of("Is this a cat?") == "is this a");
    // "whatever" must not match "what"
    CHECK(type_of("Whatever happened here") == "none of the above");
    CHECK(type_of("Describe the scene") == "none of the above");
  }

  TEST_CASE("custom lexicon without fallback rejects unknown questions") {
    TypeLexicon lex({{0, "what", CoarseGroup::Wh}, {1, "is", CoarseGroup::YesNo}});
    CHECK(infer_question_type("what is it", lex) == 0);
    CHECK_THROWS_AS(infer_question_type("where is it", lex), ValidationError);
  }

  TEST_CASE("duplicate prefixes are rejected") {
    CHECK_THROWS_AS(TypeLexicon({{0, "what", CoarseGroup::Wh}, {1, "what", CoarseGroup::Wh}}), ValidationError);
  }

  TEST_CASE("json round trip and group filter") {
    const auto& lex = TypeLexicon::default_lexicon();
    const auto back = TypeLexicon::from_json(lex.to_json());
    REQUIRE(back.size() == lex.size());
    for (std::size_t i = 0; i < lex.size(); ++i) {
      CHECK(back.at(static_cast<TaskId>(i)).prefix == lex.at(static_cast<TaskId>(i)).prefix);
      CHECK(back.at(static_cast<TaskId>(i)).group == lex.at(static_cast<TaskId>(i)).group);
    }
    const auto number = lex.filtered(CoarseGroup::Number);
    CHECK(number.size() == 3);
    CHECK(number.at(0).type_id == 0);
  }

  TEST_CASE("malformed lexicon json") {
    CHECK_THROWS_AS(TypeLexicon::from_json("{not json"), ValidationError);
  }
}
