#include "dart/errors.hpp"
#include "dart/mock_backend.hpp"
#include "dart/rollout.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include "doctest.h"

#include <random>

using namespace dart;

TEST_SUITE("rollout") {

TEST_CASE("worked advantage vector") {
  std::vector<double> r{1.0, 0.5, 0.0, 0.5};
  auto a = group_advantages(r);
  CHECK(a[0] == doctest::Approx(1.414213522373096).epsilon(1e-12));
  CHECK(a[1] == 0.0);
  CHECK(a[2] == doctest::Approx(-1.414213522373096).epsilon(1e-12));
  CHECK(a[3] == 0.0);
}

TEST_CASE("constant and singleton groups") {
  std::vector<double> c{0.3, 0.3, 0.3};
  for (double x : group_advantages(c)) CHECK(x == 0.0);
  std::vector<double> one{0.7};
  CHECK(group_advantages(one) == std::vector<double>{0.0});
  CHECK_THROWS_AS(group_advantages(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("standardization and shift invariance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 16);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> r(size(rng));
    for (auto& x : r) x = u(rng);
    auto a = group_advantages(r);
    CHECK(std::abs(oracle::mean(a)) < 1e-9);
    // The epsilon in the denominator makes the result std sigma/(sigma+eps) rather than 1.
    double sigma = oracle::population_std(r);
    CHECK(std::abs(oracle::population_std(a) - sigma / (sigma + 1e-8)) < 1e-12);
    double shift = 10.0 * u(rng) - 5.0;
    std::vector<double> shifted = r;
    for (auto& x : shifted) x += shift;
    auto b = group_advantages(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
  }
}

TEST_CASE("collect_group on the mock backend") {
  MockBackend mock;
  auto samples = read_samples(testing::repo_path("data/toy_math_50.jsonl"));
  RolloutConfig cfg;
  auto g = collect_group(samples[0], mock, mock, PromptTemplate::mapper(), cfg);
  CHECK(g.sample_id == samples[0].id);
  CHECK(g.rollouts.size() == 8);
  CHECK(g.advantages.size() == 8);
  for (const auto& r : g.rollouts) {
    CHECK(r.reward.r_final == r.reward.r_base * r.reward.p_align * r.reward.p_cheat);
  }
  CHECK(collect_group(samples[0], mock, mock, PromptTemplate::mapper(), cfg) == g);
}

TEST_CASE("failures carry the sample id and do not stop the batch") {
  MockConfig mc;
  mc.fail_marker = "storm";
  MockBackend mock(mc);
  auto samples = read_samples(testing::repo_path("data/toy_math_50.jsonl"));
  std::vector<Sample> few(samples.begin(), samples.begin() + 3);
  RolloutConfig cfg;
  cfg.group_size = 2;
  auto res = collect_groups(few, mock, mock, PromptTemplate::mapper(), cfg, 2);
  REQUIRE(res.size() == 3);
  REQUIRE(res[0].error);  // toy-000 is the orchard problem
  CHECK(res[0].error->find("toy-000") != std::string::npos);
  CHECK(res[1].group);
  CHECK(res[2].group);
}

TEST_CASE("GRPO export is sorted and round-trips") {
  RolloutGroup b{"b", {{"x", {}}, {"y", {}}}, {0.5, -0.5}};
  RolloutGroup a{"a", {{"z", {}}}, {0.0}};
  b.rollouts[0].reward.r_final = 1.0;
  std::vector<RolloutGroup> groups{b, a};
  auto recs = to_grpo_records(groups);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].sample_id == "a");
  CHECK(recs[1].sample_id == "b");
  CHECK(recs[1].reward == 1.0);
  CHECK(recs[2].rollout_index == 1);
  testing::TempDir dir("grpo");
  export_grpo_batch(groups, dir / "g.jsonl");
  CHECK(read_grpo_batch(dir / "g.jsonl") == recs);
}

TEST_CASE("batch means") {
  RolloutGroup g1{"a", {{"", {}}, {"", {}}}, {0, 0}};
  g1.rollouts[0].reward.r_final = 1.0;
  RolloutGroup g2{"b", {{"", {}}}, {0}};
  g2.rollouts[0].reward.r_final = 0.5;
  std::vector<RolloutGroup> gs{g1, g2};
  auto m = batch_mean_rewards(gs, 1);
  CHECK(m == std::vector<double>{0.5, 0.5});
  CHECK(batch_mean_rewards(gs, 8) == std::vector<double>{0.5});
}

}
