// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "dart/config.hpp"
#include "dart/errors.hpp"
#include "dart/eval.hpp"
#include "dart/mock_backend.hpp"
#include "dart/reward.hpp"
#include "dart/rollout.hpp"
#include "dart/synthesis.hpp"
#include "dart/theory.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>

using namespace dart;

namespace {

// Tolerances and budgets.
constexpr double kHandTol = 1e-9;
constexpr double kTailExactTol = 1e-12;
constexpr double kMeanTol = 1e-9;
constexpr double kStdTol = 1e-6;
constexpr double kShiftTol = 1e-9;
constexpr double kNllTol = 1e-9;
constexpr double kRewardBudgetS = 5.0;
constexpr double kTheoryBudgetS = 30.0;
constexpr double kPipelineBudgetS = 60.0;

// Hand-computed reference values (ln 0.02 and exp(0.5 * (ln 0.02 + 2))).
constexpr double kHandSHard = -3.9120230054281455;
constexpr double kHandPAlign = 0.3844231028159118;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects the first failure message; later ones are counted.
struct Checker {
  Outcome out;
  int failures = 0;
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ == 0) out.detail = what;
    out.pass = false;
  }
  Outcome done(const std::string& summary) {
    if (out.pass) out.detail = summary;
    else if (failures > 1) out.detail += fmt::format(" (+{} more)", failures - 1);
    return out;
  }
};

std::vector<TokenScore> scores_of(const std::vector<double>& probs) {
  std::vector<TokenScore> out;
  for (std::size_t i = 0; i < probs.size(); ++i)
    out.push_back({"t", probs[i], static_cast<long long>(i) + 1});
  return out;
}

std::vector<double> random_probs(std::mt19937_64& rng, int max_len) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_real_distribution<double> u(1e-4, 1.0);
  std::vector<double> p(static_cast<std::size_t>(len(rng)));
  for (auto& x : p) x = u(rng);
  return p;
}

Outcome reward_algebra() {
  Checker c;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> tier(0, 2);
  for (int t = 0; t < 1000; ++t) {
    auto p = random_probs(rng, 300);
    RewardConfig cfg{0.05 + 0.9 * u(rng), -40.0 * u(rng), 0.01 + 2.0 * u(rng), 50};
    auto ot = static_cast<OutcomeTier>(tier(rng));
    long long lv = static_cast<long long>(u(rng) * 120);
    auto r = compute_reward(scores_of(p), ot, lv, cfg);
    c.expect(r.s_hard <= 0.0, fmt::format("trial {}: s_hard {} > 0", t, r.s_hard));
    c.expect(r.p_align > 0.0 && r.p_align <= 1.0, fmt::format("trial {}: p_align {} outside (0,1]", t, r.p_align));
    c.expect(r.r_final == r.r_base * r.p_align * r.p_cheat, fmt::format("trial {}: r_final not the exact product", t));

    // Single-token monotonicity: raising one token's probability never lowers p_align.
    std::size_t i = static_cast<std::size_t>(u(rng) * static_cast<double>(p.size())) % p.size();
    auto raised = p;
    raised[i] = p[i] + (1.0 - p[i]) * u(rng);
    double a0 = compute_p_align(compute_s_hard(scores_of(p), cfg.tau), cfg);
    double a1 = compute_p_align(compute_s_hard(scores_of(raised), cfg.tau), cfg);
    c.expect(a1 >= a0, fmt::format("trial {}: raising token {} lowered p_align {} -> {}", t, i, a0, a1));
  }
  double s = compute_s_hard(scores_of({0.9, 0.2, 0.1}), 0.5);
  double a = compute_p_align(s, RewardConfig{0.5, -2.0, 0.5, 50});
  c.expect(std::abs(s - kHandSHard) <= kHandTol, fmt::format("s_hard {:.12f}", s));
  c.expect(std::abs(a - kHandPAlign) <= kHandTol, fmt::format("p_align {:.12f}", a));
  return c.done(fmt::format("1000 random sequences; s_hard={:.9f} p_align={:.9f}", s, a));
}

Outcome tier_table() {
  Checker c;
  auto corpus = testing::grading_corpus();
  c.expect(corpus.size() == 30, fmt::format("corpus has {} cases", corpus.size()));
  int counts[3] = {0, 0, 0};
  for (const auto& g : corpus) {
    double got = score_r_base(classify_outcome(g.text, g.truth));
    c.expect(got == g.r_base, fmt::format("{}: r_base {} expected {}", g.name, got, g.r_base));
    counts[g.r_base == 1.0 ? 0 : g.r_base == 0.5 ? 1 : 2]++;
  }
  c.expect(counts[0] > 0 && counts[1] > 0 && counts[2] > 0, "corpus must cover all three tiers");
  return c.done(fmt::format("{} cases: {} boxed, {} unboxed, {} incorrect", corpus.size(), counts[0], counts[1],
                            counts[2]));
}

Outcome length_gate() {
  Checker c;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> words(0, 120), lmin(1, 100), tier(0, 2);
  int gated = 0;
  for (int t = 0; t < 1000; ++t) {
    RewardConfig cfg;
    cfg.l_min = lmin(rng);
    int n = words(rng);
    std::string text;
    for (int i = 0; i < n; ++i) text += "w ";
    int tr = tier(rng);
    text += tr == 0 ? "\\boxed{7}" : tr == 1 ? "so 7" : "\\boxed{8}";
    std::vector<double> probs(static_cast<std::size_t>(n + 1), 0.9);
    auto r = score_completion(text, "7", scores_of(probs), cfg);
    if (r.l_valid < cfg.l_min) {
      ++gated;
      c.expect(r.r_final == 0.0, fmt::format("trial {}: l_valid {} < {} but r_final {}", t, r.l_valid, cfg.l_min,
                                             r.r_final));
    } else {
      c.expect(r.p_cheat == 1.0, fmt::format("trial {}: gate closed at l_valid {}", t, r.l_valid));
    }
  }
  c.expect(gated > 100, "too few gated cases to be meaningful");
  return c.done(fmt::format("1000 random rollouts, {} below the length floor", gated));
}

Outcome theory_suite() {
  Checker c;
  double worst = 0.0;
  for (int n = 1; n <= 12; ++n)
    for (int k = 1; k <= n; ++k)
      for (int r = 0; r <= 20; ++r) {
        double rho = r / 20.0;
        double err = std::abs(binomial_tail(n, k, rho) - static_cast<double>(oracle::enumerate_tail(n, k, rho)));
        worst = std::max(worst, err);
        c.expect(err <= kTailExactTol, fmt::format("n={} k={} rho={} err={:.3e}", n, k, rho, err));
      }

  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> nd(1, 40);
  for (int t = 0; t < 50; ++t) {
    int n = nd(rng);
    int k = 1 + static_cast<int>(u(rng) * n) % n;
    double rho = u(rng);
    double exact = binomial_tail(n, k, rho);
    double mc = monte_carlo_tail(n, k, rho, 100000, rng());
    double sigma = std::sqrt(exact * (1.0 - exact) / 1e5);
    c.expect(std::abs(mc - exact) <= 3.0 * sigma + 1e-12,
             fmt::format("MC n={} k={} rho={:.4f}: {} vs {}", n, k, rho, mc, exact));
  }

  for (int t = 0; t < 500; ++t) {
    TheoremParams p;
    p.c0 = u(rng);
    p.m0 = u(rng) * 0.99;
    p.delta_m = std::max(1e-6, u(rng) * (1.0 - p.m0));
    p.n_z = 1 + static_cast<long long>(u(rng) * 200);
    p.k_z = 1 + static_cast<long long>(u(rng) * static_cast<double>(p.n_z)) % p.n_z;
    p.a_minus = u(rng) * 0.9;
    p.a_plus = p.a_minus + std::max(1e-6, u(rng) * (1.0 - p.a_minus));
    if (p.a_plus > 1.0) p.a_plus = 1.0;
    auto rep = check_dominance(p);
    c.expect(rep.holds, fmt::format("dominance failed: c0={} m0={} dm={} n={} k={}", p.c0, p.m0, p.delta_m, p.n_z,
                                    p.k_z));
  }

  for (int t = 0; t < 1000; ++t) {
    int n = nd(rng);
    int k = 1 + static_cast<int>(u(rng) * n) % n;
    double r1 = u(rng), r2 = u(rng);
    if (r1 > r2) std::swap(r1, r2);
    double p1 = binomial_tail(n, k, r1), p2 = binomial_tail(n, k, r2);
    c.expect(p1 <= p2, fmt::format("monotonicity n={} k={} {} -> {}", n, k, r1, r2));
    if (r1 < r2 && r1 > 0.0 && r2 < 1.0) {
      auto l1 = binomial_tail_log(n, k, r1), l2 = binomial_tail_log(n, k, r2);
      // One of the two log masses may saturate at 0 in double precision; the other still moves.
      bool no_reverse = l1.upper <= l2.upper && l1.lower >= l2.lower;
      bool strict = l1.upper < l2.upper || l1.lower > l2.lower;
      c.expect(no_reverse && strict, fmt::format("strict monotonicity n={} k={} {} -> {}", n, k, r1, r2));
    }
  }
  return c.done(fmt::format("enumeration max err {:.2e}; 50 MC checks; 500 dominance; 1000 monotone pairs", worst));
}

Outcome advantage_suite() {
  Checker c;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 32);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> r(static_cast<std::size_t>(size(rng)));
    for (auto& x : r) x = u(rng);
    auto a = group_advantages(r);
    c.expect(std::abs(oracle::mean(a)) <= kMeanTol, fmt::format("group {}: mean {}", t, oracle::mean(a)));
    c.expect(std::abs(oracle::population_std(a) - 1.0) <= kStdTol,
             fmt::format("group {}: std {} (reward std {:.3e}, epsilon bound {})", t, oracle::population_std(a),
                         oracle::population_std(r), oracle::population_std(r) / (oracle::population_std(r) + 1e-8)));
    double shift = 4.0 * u(rng) - 2.0;
    auto s = r;
    for (auto& x : s) x += shift;
    auto b = group_advantages(s);
    for (std::size_t i = 0; i < a.size(); ++i)
      c.expect(std::abs(a[i] - b[i]) <= kShiftTol, fmt::format("group {}: shift changed advantage {}", t, i));
    std::vector<double> constant(r.size(), r[0]);
    for (double x : group_advantages(constant)) c.expect(x == 0.0, "constant group gave nonzero advantage");
  }
  std::vector<double> worked{1.0, 0.5, 0.0, 0.5};
  auto a = group_advantages(worked);
  c.expect(std::abs(a[0] - std::sqrt(2.0)) < 1e-5 && a[1] == 0.0 && std::abs(a[2] + std::sqrt(2.0)) < 1e-5 &&
               a[3] == 0.0,
           fmt::format("worked vector gave [{}, {}, {}, {}]", a[0], a[1], a[2], a[3]));
  return c.done(fmt::format("1000 groups; worked vector [{:.5f}, {}, {:.5f}, {}]", a[0], a[1], a[2], a[3]));
}

Outcome tau_monotonicity() {
  Checker c;
  std::mt19937_64 rng(5150);
  for (int t = 0; t < 1000; ++t) {
    auto p = random_probs(rng, 200);
    double prev = 2.0;
    for (int i = 1; i <= 9; ++i) {
      RewardConfig cfg;
      cfg.tau = i / 10.0;
      double a = compute_p_align(compute_s_hard(scores_of(p), cfg.tau), cfg);
      c.expect(a <= prev, fmt::format("sequence {}: p_align rose at tau={}", t, cfg.tau));
      prev = a;
    }
  }
  c.expect(RewardConfig{}.tau == 0.5, "library default tau is not 0.5");
  c.expect(resolve_config(Json(), {}, {}).reward.tau == 0.5, "resolved default tau is not 0.5");
  return c.done("1000 sequences non-increasing over tau=0.1..0.9; default tau=0.5");
}

struct PipelineRun {
  std::string candidates, scored, accepted, sft;
  std::vector<SftRecord> records;
  std::vector<Sample> samples;
};

PipelineRun run_pipeline(const std::filesystem::path& dir) {
  PipelineConfig cfg = resolve_config(Json(), {}, {});
  auto samples = read_samples(testing::repo_path("data/toy_math_50.jsonl"));
  auto backends = make_backends(cfg);
  auto tmpl = PromptTemplate::mapper();
  auto workers = static_cast<std::size_t>(cfg.backend.max_in_flight);

  std::vector<Candidate> cands;
  for (auto& r : synthesize_all(samples, *backends.generator, tmpl, cfg.synthesis, workers)) {
    if (!r.candidate) throw std::runtime_error(*r.error);
    cands.push_back(*r.candidate);
  }
  write_candidates(dir / "candidates.jsonl", cands);
  auto reread = read_candidates(dir / "candidates.jsonl");
  std::vector<Candidate> scored;
  for (auto& r : score_candidates(reread, samples, *backends.scorer, tmpl, cfg.reward, workers)) {
    if (!r.candidate) throw std::runtime_error(*r.error);
    scored.push_back(*r.candidate);
  }
  write_candidates(dir / "scored.jsonl", scored);
  std::vector<OptimizedSample> accepted;
  for (auto& d : filter_candidates(read_candidates(dir / "scored.jsonl"), samples, cfg.filter))
    if (d.filter.accepted) accepted.push_back(d);
  write_optimized(dir / "accepted.jsonl", accepted);
  emit_sft_dataset(read_optimized(dir / "accepted.jsonl"), samples, dir / "sft.jsonl", cfg.tags);

  PipelineRun run;
  run.candidates = testing::slurp(dir / "candidates.jsonl");
  run.scored = testing::slurp(dir / "scored.jsonl");
  run.accepted = testing::slurp(dir / "accepted.jsonl");
  run.sft = testing::slurp(dir / "sft.jsonl");
  run.records = read_sft(dir / "sft.jsonl");
  run.samples = samples;
  return run;
}

Outcome hermetic_pipeline() {
  Checker c;
  testing::TempDir d1("acc1"), d2("acc2");
  auto a = run_pipeline(d1.path());
  auto b = run_pipeline(d2.path());
  c.expect(a.samples.size() == 50, fmt::format("dataset has {} samples", a.samples.size()));
  c.expect(a.candidates == b.candidates, "candidates differ between runs");
  c.expect(a.scored == b.scored, "scored candidates differ between runs");
  c.expect(a.accepted == b.accepted, "accepted records differ between runs");
  c.expect(a.sft == b.sft, "SFT output differs between runs");
  c.expect(!a.records.empty(), "no SFT records emitted");
  auto index = index_by_id(a.samples);
  for (const auto& r : a.records) {
    const Sample& s = *index.at(r.sample_id);
    c.expect(classify_outcome(r.target, s.ground_truth) != OutcomeTier::Incorrect,
             fmt::format("SFT target for {} is incorrect", r.sample_id));
  }
  return c.done(fmt::format("50 samples -> {} SFT records, two runs byte-identical", a.records.size()));
}

Outcome avg_at_4() {
  Checker c;
  std::vector<EvalRecord> one{{"a", {true, false, true, true}}};
  c.expect(format_percent(avg_at_k(one)) == "75.00", "[T,F,T,T] is not 75.00");
  std::vector<EvalRecord> two{{"a", {true, true, true, true}}, {"b", {false, false, false, false}}};
  c.expect(format_percent(avg_at_k(two)) == "50.00", "[TTTT],[FFFF] is not 50.00");
  auto inputs = read_eval_inputs(testing::data_path("eval_mixed_k.jsonl"));
  bool rejected = false;
  try {
    avg_at_k(grade_responses(inputs));
  } catch (const ValidationError& e) {
    rejected = std::string(e.what()).find("q2-mixed") != std::string::npos;
  }
  c.expect(rejected, "mixed-k input was not rejected with the sample named");
  return c.done("75.00 and 50.00 reproduced; mixed k rejected");
}

class TableScorer final : public ScoringBackend {
 public:
  explicit TableScorer(std::vector<double> p) : p_(std::move(p)) {}
  std::vector<TokenScore> score_tokens(const ScoreRequest&) const override { return scores_of(p_); }

 private:
  std::vector<double> p_;
};

Outcome nll_suite() {
  Checker c;
  std::vector<SftRecord> ds{{"prompt", "target", "x"}};
  double e = std::exp(-1.0);
  auto rep = mean_nll(ds, TableScorer({e, e}));
  c.expect(std::abs(rep.per_token - 1.0) <= kNllTol, fmt::format("per-token nll {}", rep.per_token));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int t = 0; t < 1000; ++t) {
    auto p = random_probs(rng, 20);
    for (auto& x : p) x = std::min(x, 0.99);
    std::size_t i = static_cast<std::size_t>(t) % p.size();
    auto q = p;
    q[i] = p[i] + (1.0 - p[i]) * u(rng);
    if (q[i] == p[i]) continue;
    double before = mean_nll(ds, TableScorer(p)).per_token;
    double after = mean_nll(ds, TableScorer(q)).per_token;
    c.expect(after < before, fmt::format("trial {}: raising token {} did not lower nll", t, i));
  }
  return c.done(fmt::format("per-token nll {:.12f}; 1000 strict monotone raises", rep.per_token));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_s;
  };
  const std::vector<Criterion> criteria{
      {1, "reward algebra", reward_algebra, kRewardBudgetS},
      {2, "outcome tier table", tier_table, 0.0},
      {3, "length gate", length_gate, 0.0},
      {4, "binomial tail and dominance", theory_suite, kTheoryBudgetS},
      {5, "group advantages", advantage_suite, 0.0},
      {6, "tau monotonicity", tau_monotonicity, 0.0},
      {7, "hermetic mock pipeline", hermetic_pipeline, kPipelineBudgetS},
      {8, "avg@4 aggregation", avg_at_4, 0.0},
      {9, "mean nll", nll_suite, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += fmt::format("; took {:.2f}s, budget {:.0f}s", secs, c.budget_s);
    }
    if (!o.pass) ++failed;
    std::cout << fmt::format("[{}] criterion {}: {} ({:.3f}s) - {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                             o.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
