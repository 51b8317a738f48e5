#include "dart/answer.hpp"
#include "dart/reward.hpp"
#include "test_support.hpp"

#include "doctest.h"

using namespace dart;

TEST_SUITE("answer") {

TEST_CASE("extract_boxed takes the last balanced box") {
  auto r = extract_boxed("a \\boxed{1} b \\boxed{\\frac{1}{2}} c");
  REQUIRE(r.answer);
  CHECK(*r.answer == "\\frac{1}{2}");
  CHECK(r.boxed);
  CHECK(r.span.begin == 14);
}

TEST_CASE("span covers the whole marker") {
  std::string text = "so \\boxed{42}.";
  auto r = extract_boxed(text);
  CHECK(text.substr(r.span.begin, r.span.end - r.span.begin) == "\\boxed{42}");
}

TEST_CASE("escaped braces do not close the box") {
  auto r = extract_boxed("\\boxed{\\{1,2\\}}");
  REQUIRE(r.answer);
  CHECK(*r.answer == "\\{1,2\\}");
}

TEST_CASE("blank and unbalanced boxes fall back") {
  CHECK_FALSE(extract_boxed("\\boxed{  }").answer);
  auto r = extract_boxed("\\boxed{5} and then \\boxed{6");
  REQUIRE(r.answer);
  CHECK(*r.answer == "5");
  CHECK(r.boxed);
}

TEST_CASE("unboxed fallback reads the final sentence only") {
  auto r = extract_boxed("We had 3 apples. Now there are 1,250 in total.");
  REQUIRE(r.answer);
  CHECK(*r.answer == "1,250");
  CHECK_FALSE(r.boxed);
  CHECK_FALSE(extract_boxed("We had 3 apples. None remain.").answer);
  CHECK(*extract_boxed("It is \\frac{3}{4}").answer == "\\frac{3}{4}");
  CHECK(*extract_boxed("value -2.5").answer == "-2.5");
}

TEST_CASE("exact_value normalizes numbers") {
  CHECK(exact_value("110") == "110");
  CHECK(exact_value("0.50") == "1/2");
  CHECK(exact_value("\\frac{6}{4}") == "3/2");
  CHECK(exact_value("-3/6") == "-1/2");
  CHECK(exact_value("1,000") == "1000");
  CHECK_FALSE(exact_value("x+1"));
  CHECK_FALSE(exact_value("1,00"));
  CHECK_FALSE(exact_value("1/0"));
}

TEST_CASE("canonical_answer strips formatting") {
  CHECK(canonical_answer("$\\text{ B }$") == "B");
  CHECK(canonical_answer("\\( x + 1 \\)") == "x+1");
  CHECK(canonical_answer("\\dfrac{1}{2}.") == "\\frac{1}{2}");
}

TEST_CASE("equivalence is symmetric on the grading corpus") {
  for (const auto& c : testing::grading_corpus()) {
    auto ex = extract_boxed(c.text);
    if (!ex.answer) continue;
    CAPTURE(c.name);
    CHECK(answers_equivalent(*ex.answer, c.truth) == answers_equivalent(c.truth, *ex.answer));
  }
}

TEST_CASE("tier table over the grading corpus") {
  auto corpus = testing::grading_corpus();
  REQUIRE(corpus.size() == 30);
  for (const auto& c : corpus) {
    CAPTURE(c.name);
    CHECK(score_r_base(classify_outcome(c.text, c.truth)) == c.r_base);
  }
}

TEST_CASE("blank truth is never matched") {
  CHECK(classify_outcome("\\boxed{}", "") == OutcomeTier::Incorrect);
  CHECK(classify_outcome("\\boxed{1}", "  ") == OutcomeTier::Incorrect);
}

}
