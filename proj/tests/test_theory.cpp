#include "dart/errors.hpp"
#include "dart/theory.hpp"
#include "oracles.hpp"

#include "doctest.h"

#include <random>

using namespace dart;

TEST_SUITE("theory") {

TEST_CASE("effective probability") {
  CHECK(effective_probability(1.0, 0.6) == 0.6);
  CHECK(effective_probability(0.8, 0.5) == 0.4);
  CHECK(effective_probability(0.0, 0.3) == 0.0);
  CHECK_THROWS_AS(effective_probability(1.1, 0.5), DomainError);
}

TEST_CASE("tail worked values") {
  CHECK(binomial_tail(2, 1, 0.5) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(binomial_tail(4, 2, 0.5) == doctest::Approx(0.6875).epsilon(1e-15));
  CHECK(binomial_tail(7, 1, 0.0) == 0.0);
  CHECK(binomial_tail(7, 7, 1.0) == 1.0);
  CHECK_THROWS_AS(binomial_tail(3, 4, 0.5), DomainError);
  CHECK_THROWS_AS(binomial_tail(3, 0, 0.5), DomainError);
  CHECK_THROWS_AS(binomial_tail(3, 1, -0.1), DomainError);
}

TEST_CASE("tail matches enumeration for n <= 12") {
  for (int n = 1; n <= 12; ++n)
    for (int k = 1; k <= n; ++k)
      for (int r = 1; r <= 9; ++r) {
        double rho = r / 10.0;
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(rho);
        CHECK(std::abs(binomial_tail(n, k, rho) - static_cast<double>(oracle::enumerate_tail(n, k, rho))) < 1e-12);
      }
}

TEST_CASE("k = 1 identity") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    long long n = 1 + static_cast<long long>(u(rng) * 200);
    double rho = u(rng);
    CHECK(std::abs(binomial_tail(n, 1, rho) - (1.0 - std::pow(1.0 - rho, static_cast<double>(n)))) < 1e-12);
  }
}

TEST_CASE("large n stays finite and ordered") {
  double lo = binomial_tail(1'000'000, 500'000, 0.4999);
  double hi = binomial_tail(1'000'000, 500'000, 0.5001);
  CHECK(lo < hi);
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK_THROWS_AS(binomial_tail(1'000'001, 1, 0.5), DomainError);
}

TEST_CASE("expected accuracy") {
  TheoremParams p;
  p.n_z = 2;
  p.k_z = 1;
  CHECK(expected_accuracy(p, 0.5) == doctest::Approx(0.725).epsilon(1e-15));
  CHECK(expected_accuracy(p, 0.0) == p.a_minus);
  CHECK(expected_accuracy(p, 1.0) == doctest::Approx(p.a_plus).epsilon(1e-15));
}

TEST_CASE("dominance examples") {
  auto rep = check_dominance(TheoremParams{});
  CHECK(rep.holds);
  CHECK(rep.rho0 == doctest::Approx(0.45));
  CHECK(rep.rho_phi == doctest::Approx(0.70));
  CHECK(rep.acc0 == doctest::Approx(0.8303082434936329).epsilon(1e-12));
  CHECK(rep.acc_phi == doctest::Approx(0.89888672952).epsilon(1e-10));
  CHECK(rep.gain == doctest::Approx(rep.acc_phi - rep.acc0).epsilon(1e-9));

  TheoremParams edge{1.0, 0.99, 0.01, 1, 1, 0.2, 0.9};
  auto e = check_dominance(edge);
  CHECK(e.holds);
  CHECK(e.rho_phi == doctest::Approx(1.0));

  TheoremParams zero;
  zero.delta_m = 0.0;
  CHECK_THROWS_AS(check_dominance(zero), DomainError);
  TheoremParams over;
  over.m0 = 0.9;
  over.delta_m = 0.2;
  CHECK_THROWS_AS(check_dominance(over), DomainError);
}

TEST_CASE("dominance survives double rounding") {
  // Both tails round to 1.0 in double; the log comparison still sees the gain.
  TheoremParams p{0.99, 0.9, 0.05, 100000, 10, 0.1, 0.9};
  auto rep = check_dominance(p);
  CHECK(rep.acc0 == rep.acc_phi);
  CHECK(rep.holds);
}

TEST_CASE("monte carlo agrees within three sigma") {
  double mc = monte_carlo_tail(2, 1, 0.5, 100000, 42);
  CHECK(std::abs(mc - 0.75) < 3.0 * std::sqrt(0.1875 / 1e5));
  CHECK(monte_carlo_tail(5, 2, 1.0, 100, 1) == 1.0);
  CHECK(monte_carlo_tail(5, 2, 0.0, 100, 1) == 0.0);
  CHECK(monte_carlo_tail(5, 2, 0.3, 1000, 9) == monte_carlo_tail(5, 2, 0.3, 1000, 9));
}

}
