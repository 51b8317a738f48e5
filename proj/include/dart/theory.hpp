#pragma once

#include <cstdint>

namespace dart {

/// Instantiation of the supervision model for one reasoning pattern.
struct TheoremParams {
  double c0 = 0.9;        ///< P(correct) under the original data
  double m0 = 0.5;        ///< P(base-compatible | correct) under the original data
  double delta_m = 0.2;   ///< compatibility gain of the optimized data, > 0
  long long n_z = 10;     ///< training samples exhibiting the pattern
  long long k_z = 3;      ///< effective samples needed to acquire it
  double a_minus = 0.2;   ///< accuracy if the pattern is not acquired
  double a_plus = 0.9;    ///< accuracy once acquired, > a_minus

  /// Throws DomainError on any violated invariant.
  void validate() const;
};

/// Largest n accepted by the tail routines. Extended precision keeps the log-pmf recurrence
/// accurate to roughly n * 1e-19 relative error, i.e. about 1e-13 at the cap.
inline constexpr long long kMaxTrials = 1'000'000;

/// rho = c * m. Throws DomainError unless both lie in [0, 1].
double effective_probability(double c, double m);

/// Natural logs of P(N >= k) and P(N < k) for N ~ Binomial(n, rho).
struct TailLogMass {
  long double upper;
  long double lower;
};

TailLogMass binomial_tail_log(long long n, long long k, double rho);

/// P(N >= k) for N ~ Binomial(n, rho), summed from log-pmf terms generated by the multiplicative
/// recurrence pmf(j+1) = pmf(j) * (n-j)/(j+1) * rho/(1-rho), anchored at the mode. Psi(0) = 0 and
/// Psi(1) = 1 exactly. Throws DomainError unless 1 <= k <= n <= kMaxTrials and rho in [0, 1].
double binomial_tail(long long n, long long k, double rho);

/// a_minus + (a_plus - a_minus) * Psi_{n,k}(rho).
double expected_accuracy(const TheoremParams& params, double rho);

struct DominanceReport {
  double rho0 = 0.0;     ///< c0 * m0
  double rho_phi = 0.0;  ///< m0 + delta_m (the guaranteed lower bound)
  double acc0 = 0.0;
  double acc_phi = 0.0;
  double gain = 0.0;     ///< acc_phi - acc0, computed from the tail masses
  bool holds = false;    ///< acc_phi > acc0
};

/// Evaluates both accuracies. `holds` compares the exact tail masses in log space, so it stays
/// correct when both accuracies round to the same double (large n, small k).
DominanceReport check_dominance(const TheoremParams& params);

/// Fraction of `draws` simulated batches of n Bernoulli(rho) trials with at least k successes.
double monte_carlo_tail(long long n, long long k, double rho, long long draws, std::uint64_t seed);

}  // namespace dart
