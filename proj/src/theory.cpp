#include "dart/theory.hpp"

#include "dart/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace dart {

namespace {

constexpr long double kNegInf = -std::numeric_limits<long double>::infinity();

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_tail_args(long long n, long long k, double rho) {
  if (n < 1 || n > kMaxTrials) throw DomainError("n must lie in [1, " + std::to_string(kMaxTrials) + "]");
  if (k < 1 || k > n) throw DomainError("k must lie in [1, n], got k=" + std::to_string(k) + " n=" + std::to_string(n));
  if (!is_probability(rho)) throw DomainError("rho must lie in [0, 1]");
}

long double log_sum_exp(const std::vector<long double>& terms, std::size_t begin, std::size_t end) {
  if (begin >= end) return kNegInf;
  long double peak = *std::max_element(terms.begin() + static_cast<std::ptrdiff_t>(begin),
                                       terms.begin() + static_cast<std::ptrdiff_t>(end));
  if (peak == kNegInf) return kNegInf;
  long double sum = 0.0L;
  for (std::size_t j = begin; j < end; ++j) sum += std::exp(terms[j] - peak);
  return peak + std::log(sum);
}

}  // namespace

void TheoremParams::validate() const {
  if (!is_probability(c0)) throw DomainError("c0 must lie in [0, 1]");
  if (!is_probability(m0)) throw DomainError("m0 must lie in [0, 1]");
  if (!(delta_m > 0.0)) throw DomainError("delta_m must be > 0");
  if (!(m0 + delta_m <= 1.0)) throw DomainError("m0 + delta_m must not exceed 1");
  if (n_z < 1 || n_z > kMaxTrials) throw DomainError("n_z must lie in [1, " + std::to_string(kMaxTrials) + "]");
  if (k_z < 1 || k_z > n_z) throw DomainError("k_z must lie in [1, n_z]");
  if (!is_probability(a_minus) || !is_probability(a_plus)) throw DomainError("a_minus and a_plus must lie in [0, 1]");
  if (!(a_plus > a_minus)) throw DomainError("a_plus must exceed a_minus");
}

double effective_probability(double c, double m) {
  if (!is_probability(c) || !is_probability(m)) throw DomainError("c and m must lie in [0, 1]");
  return c * m;
}

TailLogMass binomial_tail_log(long long n, long long k, double rho) {
  check_tail_args(n, k, rho);
  if (rho == 0.0) return {kNegInf, 0.0L};
  if (rho == 1.0) return {0.0L, kNegInf};

  const auto un = static_cast<std::size_t>(n);
  const long double lp = std::log(static_cast<long double>(rho));
  const long double lq = std::log1p(-static_cast<long double>(rho));
  const long double log_odds = lp - lq;
  const auto mode = static_cast<long long>(std::clamp<long double>(std::floor((n + 1) * static_cast<long double>(rho)), 0.0L,
                                                                 static_cast<long double>(n)));

  std::vector<long double> log_pmf(un + 1);
  const auto m = static_cast<std::size_t>(mode);
  log_pmf[m] = std::lgamma(static_cast<long double>(n) + 1.0L) - std::lgamma(static_cast<long double>(mode) + 1.0L) -
               std::lgamma(static_cast<long double>(n - mode) + 1.0L) + static_cast<long double>(mode) * lp +
               static_cast<long double>(n - mode) * lq;
  for (std::size_t j = m + 1; j <= un; ++j) {
    log_pmf[j] = log_pmf[j - 1] + std::log(static_cast<long double>(un - j + 1) / static_cast<long double>(j)) + log_odds;
  }
  for (std::size_t j = m; j-- > 0;) {
    log_pmf[j] = log_pmf[j + 1] + std::log(static_cast<long double>(j + 1) / static_cast<long double>(un - j)) - log_odds;
  }
  const auto uk = static_cast<std::size_t>(k);
  long double upper = log_sum_exp(log_pmf, uk, un + 1);
  long double lower = log_sum_exp(log_pmf, 0, uk);
  // The larger side sums to nearly 1 and loses its tail in rounding; rebuild it from the smaller.
  if (upper > lower) {
    upper = std::log1p(-std::exp(lower));
  } else {
    lower = std::log1p(-std::exp(upper));
  }
  return {upper, lower};
}

double binomial_tail(long long n, long long k, double rho) {
  check_tail_args(n, k, rho);
  if (rho == 0.0) return 0.0;
  if (rho == 1.0) return 1.0;
  TailLogMass t = binomial_tail_log(n, k, rho);
  // Use whichever side is smaller; it carries full relative precision.
  long double value = t.upper <= t.lower ? std::exp(t.upper) : 1.0L - std::exp(t.lower);
  return std::clamp(static_cast<double>(value), 0.0, 1.0);
}

double expected_accuracy(const TheoremParams& params, double rho) {
  params.validate();
  if (!is_probability(rho)) throw DomainError("rho must lie in [0, 1]");
  double psi = binomial_tail(params.n_z, params.k_z, rho);
  return params.a_minus + (params.a_plus - params.a_minus) * psi;
}

DominanceReport check_dominance(const TheoremParams& params) {
  params.validate();
  DominanceReport r;
  r.rho0 = effective_probability(params.c0, params.m0);
  r.rho_phi = std::min(1.0, params.m0 + params.delta_m);
  r.acc0 = expected_accuracy(params, r.rho0);
  r.acc_phi = expected_accuracy(params, r.rho_phi);

  TailLogMass t0 = binomial_tail_log(params.n_z, params.k_z, r.rho0);
  TailLogMass t1 = binomial_tail_log(params.n_z, params.k_z, r.rho_phi);
  const long double spread = static_cast<long double>(params.a_plus) - params.a_minus;
  long double delta_psi;
  if (t0.upper <= t0.lower && t1.upper <= t1.lower) {
    // Both upper tails small: compare them directly.
    delta_psi = t0.upper == kNegInf ? std::exp(t1.upper) : std::exp(t0.upper) * std::expm1(t1.upper - t0.upper);
    r.holds = t1.upper > t0.upper;
  } else if (t0.lower < t0.upper && t1.lower < t1.upper) {
    // Both lower tails small: Psi1 - Psi0 = L0 - L1.
    delta_psi = t1.lower == kNegInf ? std::exp(t0.lower) : std::exp(t1.lower) * std::expm1(t0.lower - t1.lower);
    r.holds = t1.lower < t0.lower;
  } else {
    delta_psi = (1.0L - std::exp(t1.lower)) - std::exp(t0.upper);
    r.holds = delta_psi > 0.0L;
  }
  r.gain = static_cast<double>(spread * delta_psi);
  r.holds = r.holds && spread > 0.0L;
  return r;
}

double monte_carlo_tail(long long n, long long k, double rho, long long draws, std::uint64_t seed) {
  check_tail_args(n, k, rho);
  if (draws < 1) throw DomainError("draws must be >= 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution trial(rho);
  long long hits = 0;
  for (long long d = 0; d < draws; ++d) {
    long long successes = 0;
    for (long long t = 0; t < n; ++t) {
      if (trial(rng)) ++successes;
      if (successes >= k) break;
      if (successes + (n - t - 1) < k) break;
    }
    if (successes >= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace dart
