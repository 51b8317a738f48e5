#include "dart/errors.hpp"
#include "dart/reward.hpp"
#include "oracles.hpp"

#include "doctest.h"

#include <random>

using namespace dart;

namespace {

std::vector<TokenScore> scores_of(const std::vector<double>& probs) {
  std::vector<TokenScore> out;
  for (std::size_t i = 0; i < probs.size(); ++i) out.push_back({"t" + std::to_string(i), probs[i], (long long)i + 1});
  return out;
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("hand vector") {
  auto s = scores_of({0.9, 0.2, 0.1});
  double s_hard = compute_s_hard(s, 0.5);
  CHECK(std::abs(s_hard - -3.9120230054281455) < 1e-12);
  RewardConfig cfg{0.5, -2.0, 0.5, 50};
  CHECK(std::abs(compute_p_align(s_hard, cfg) - 0.3844231028159118) < 1e-12);
  CHECK(std::abs(compute_p_align(-3.912, cfg) - 0.38442752475037856) < 1e-12);
}

TEST_CASE("threshold is strict") {
  CHECK(compute_s_hard(scores_of({0.5, 0.5}), 0.5) == 0.0);
  CHECK(compute_s_hard(scores_of({0.4999}), 0.5) == doctest::Approx(std::log(0.4999)));
}

TEST_CASE("p_align is exactly one inside the tolerance") {
  RewardConfig cfg;
  CHECK(compute_p_align(0.0, cfg) == 1.0);
  CHECK(compute_p_align(-10.0, cfg) == 1.0);
  CHECK(compute_p_align(-10.5, cfg) < 1.0);
}

TEST_CASE("gate boundary") {
  RewardConfig cfg;
  CHECK(compute_p_cheat(49, cfg) == 0.0);
  CHECK(compute_p_cheat(50, cfg) == 1.0);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(compute_s_hard(scores_of({0.0}), 0.5), DomainError);
  CHECK_THROWS_AS(compute_s_hard(scores_of({1.2}), 0.5), DomainError);
  std::vector<TokenScore> dup{{"a", 0.3, 1}, {"b", 0.3, 1}};
  CHECK_THROWS_AS(compute_s_hard(dup, 0.5), DomainError);
  CHECK_THROWS_AS(compute_excess(0.1, RewardConfig{}), DomainError);
  CHECK_THROWS_AS((RewardConfig{1.0, -10, 0.1, 50}.validate()), DomainError);
  CHECK_THROWS_AS((RewardConfig{0.5, 1.0, 0.1, 50}.validate()), DomainError);
  CHECK_THROWS_AS((RewardConfig{0.5, -10, 0.0, 50}.validate()), DomainError);
}

TEST_CASE("randomized agreement with the oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> prob(1e-6, 1.0);
  std::uniform_int_distribution<int> len(0, 200), tier(0, 2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(len(rng));
    for (auto& x : p) x = prob(rng);
    RewardConfig cfg{0.05 + 0.9 * prob(rng), -30.0 * prob(rng), 0.01 + prob(rng), 50};
    auto t = static_cast<OutcomeTier>(tier(rng));
    long long lv = len(rng) / 2;
    auto got = compute_reward(scores_of(p), t, lv, cfg);
    auto want = oracle::reward(p, cfg.tau, cfg.tolerance_T, cfg.beta, score_r_base(t), lv, cfg.l_min);
    CHECK(got.s_hard == doctest::Approx(want.s_hard).epsilon(1e-12));
    CHECK(got.p_align == doctest::Approx(want.p_align).epsilon(1e-12));
    CHECK(got.r_final == got.r_base * got.p_align * got.p_cheat);
    CHECK(got.p_align > 0.0);
    CHECK(got.p_align <= 1.0);
  }
}

TEST_CASE("valid length uses word tokens without scores") {
  std::string text = "one two three \\boxed{4} five";
  CHECK(count_valid_tokens({}, text) == 3);
  CHECK(count_valid_tokens({}, "no box at all") == 4);
}

TEST_CASE("valid length follows server tokens that straddle the prompt") {
  // Prompt "Q:" + completion " ab cd \\boxed{1}"; the first token "Q: ab" straddles the boundary.
  std::string completion = " ab cd \\boxed{1}";
  std::vector<TokenScore> s{{"Q: ab", 0.9, 1}, {" cd", 0.9, 2}, {" \\boxed{", 0.9, 3}, {"1}", 0.9, 4}};
  CHECK(count_valid_tokens(s, completion) == 2);
}

TEST_CASE("score_completion ties it together") {
  RewardConfig cfg;
  cfg.l_min = 3;
  std::string text = "a b c d \\boxed{7}";
  auto r = score_completion(text, "7", scores_of({0.9, 0.9, 0.9, 0.9, 0.9}), cfg);
  CHECK(r.r_base == 1.0);
  CHECK(r.l_valid == 4);
  CHECK(r.r_final == 1.0);
  auto short_one = score_completion("\\boxed{7}", "7", scores_of({0.9}), cfg);
  CHECK(short_one.r_final == 0.0);
  CHECK(short_one.r_base == 1.0);
}

}
