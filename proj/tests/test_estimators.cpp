#include <doctest.h>

#include <cmath>
#include <random>

#include "tau1/estimators.hpp"

using namespace tau1;
using doctest::Approx;

namespace {

FrequencyProfile make_profile(std::initializer_list<std::pair<std::int64_t, std::int64_t>> zs) {
  FrequencyProfile p;
  for (const auto& [i, zi] : zs) {
    p.z[i] = zi;
    p.n += i * zi;
    p.k += zi;
  }
  return p;
}

FrequencyProfile random_profile(std::mt19937_64& rng, int max_freq = 8, int max_z = 30) {
  FrequencyProfile p;
  for (std::int64_t i = 1; i <= max_freq; ++i) {
    const std::int64_t zi = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_z));
    if (zi == 0) continue;
    p.z[i] = zi;
    p.n += i * zi;
    p.k += zi;
  }
  return p;
}

}  // namespace

TEST_CASE("tau1_unbiased: worked examples") {
  CHECK(tau1_unbiased(FrequencyProfile{}, 0.5) == 0.0);
  CHECK(tau1_unbiased(make_profile({{1, 3}, {2, 1}}), 0.5) == Approx(2.0).epsilon(1e-15));
  CHECK(tau1_unbiased(make_profile({{1, 5}}), 0.9) == Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(tau1_unbiased(make_profile({{1, 5}}), 1.0), DomainError);
  CHECK_THROWS_AS(tau1_unbiased(make_profile({{1, 5}}), 0.0), DomainError);
}

TEST_CASE("tau1_smoothed: worked examples") {
  SUBCASE("profile with only singletons returns Z1 for any smoothing") {
    for (const auto& spec : {SmoothingSpec::poisson(0.7), SmoothingSpec::binomial(4, 0.3)}) {
      CHECK(tau1_smoothed(make_profile({{1, 42}}), 9.0, spec) == Approx(42.0).epsilon(1e-14));
    }
  }
  SUBCASE("two-term poisson closed form") {
    // 2 - 2*2*(1 - e^{-1}) = -0.52848223531423071
    const double v = tau1_smoothed(make_profile({{1, 2}, {2, 1}}), 2.0, SmoothingSpec::poisson(1.0));
    CHECK(v == Approx(2.0 - 4.0 * (1.0 - std::exp(-1.0))).epsilon(1e-13));
    CHECK(v == Approx(-0.52848223531423071).epsilon(1e-12));
  }
  SUBCASE("binomial truncation kills terms past x0") {
    // 4 - 2*9*(2/11)*2 = -28/11; the i = 2 term is annihilated by P(L >= 2) = 0
    const double v =
        tau1_smoothed(make_profile({{1, 4}, {2, 2}, {3, 1}}), 9.0, SmoothingSpec::binomial(1, 2.0 / 11.0));
    CHECK(v == Approx(-28.0 / 11.0).epsilon(1e-13));
  }
  SUBCASE("spec none rejected at lambda >= 1, equals unbiased below") {
    CHECK_THROWS_AS(tau1_smoothed(make_profile({{1, 1}}), 1.0, SmoothingSpec::none()), DomainError);
    const auto p = make_profile({{1, 3}, {2, 2}, {4, 1}});
    CHECK(tau1_smoothed(p, 0.6, SmoothingSpec::none()) == Approx(tau1_unbiased(p, 0.6)));
  }
}

TEST_CASE("tau1_smoothed: degenerate Binomial(0, p) equals Z1") {
  std::mt19937_64 rng(123);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_profile(rng);
    const double lambda = 1.0 + static_cast<double>(rng() % 12);
    CHECK(tau1_smoothed(p, lambda, SmoothingSpec::binomial(0, 0.37)) ==
          static_cast<double>(p.z_at(1)));
  }
}

TEST_CASE("tau1_smoothed is linear in the profile") {
  std::mt19937_64 rng(321);
  const auto spec = SmoothingSpec::poisson(0.5);
  for (int t = 0; t < 30; ++t) {
    const auto a = random_profile(rng);
    const auto b = random_profile(rng);
    FrequencyProfile sum = a;
    for (const auto& [i, zi] : b.z) sum.z[i] += zi;
    sum.n += b.n;
    sum.k += b.k;
    const double lhs = tau1_smoothed(sum, 3.0, spec);
    const double rhs = tau1_smoothed(a, 3.0, spec) + tau1_smoothed(b, 3.0, spec);
    CHECK(lhs == Approx(rhs).epsilon(1e-11).scale(1.0));
  }
}

TEST_CASE("tau1_smoothed converges to tau1_unbiased as poisson beta grows (lambda < 1)") {
  std::mt19937_64 rng(77);
  const auto p = random_profile(rng, 10, 40);
  const double lambda = 0.7;
  const double exact = tau1_unbiased(p, lambda);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double beta : {5.0, 20.0, 80.0, 320.0}) {
    const double gap = std::abs(tau1_smoothed(p, lambda, SmoothingSpec::poisson(beta)) - exact);
    // monotone until both land on the reconstruction rounding floor
    CHECK(gap <= std::max(prev_gap, 1e-9));
    prev_gap = gap;
  }
  CHECK(tau1_smoothed(p, lambda, SmoothingSpec::poisson(320.0)) ==
        Approx(exact).epsilon(1e-10).scale(1.0));
}

TEST_CASE("tau1_naive") {
  CHECK(tau1_naive(make_profile({{1, 8}, {2, 1}}), 100.0) == Approx(0.8).epsilon(1e-15));
  CHECK(tau1_naive(FrequencyProfile{}, 100.0) == 0.0);
  CHECK_THROWS_AS(tau1_naive(make_profile({{1, 8}, {2, 1}}), 9.0), DomainError);
  // never exceeds Z1
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_profile(rng);
    if (p.n == 0) continue;
    const double nbar = static_cast<double>(p.n) * (1.0 + static_cast<double>(rng() % 10));
    CHECK(tau1_naive(p, nbar) <= static_cast<double>(p.z_at(1)) + 1e-12);
  }
}

TEST_CASE("fit_dirichlet_theta: closed-form oracle at n=3, K=1") {
  // theta/(theta+1) + theta/(theta+2) = 1  <=>  theta^2 = 2
  const auto p = make_profile({{3, 1}});
  const double theta = fit_dirichlet_theta(p);
  CHECK(theta == Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(theta / (theta + 1.0) + theta / (theta + 2.0) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("fit_dirichlet_theta: boundary and substitution property") {
  CHECK_THROWS_AS(fit_dirichlet_theta(make_profile({{2, 1}})), DomainError);  // n=2, K=1
  CHECK_THROWS_AS(fit_dirichlet_theta(make_profile({{1, 3}})), DomainError);  // K = n
  std::mt19937_64 rng(11);
  for (int t = 0; t < 40; ++t) {
    const auto p = random_profile(rng, 6, 25);
    if (p.n < 3 || p.k < 1 || p.k >= p.n - 1) continue;
    const double theta = fit_dirichlet_theta(p);
    // substitute back through the plain sum, independently of digamma
    double s = 0.0;
    for (std::int64_t j = 1; j < p.n; ++j) s += theta / (theta + static_cast<double>(j));
    REQUIRE(s == Approx(static_cast<double>(p.k)).epsilon(1e-8));
  }
}

TEST_CASE("fit_dirichlet_theta: standard convention shifts the equation by one") {
  const auto p = make_profile({{1, 2}, {2, 2}, {3, 1}});  // n=9, K=5
  const double theta = fit_dirichlet_theta(p, ThetaConvention::Standard);
  double s = 1.0;  // j = 0 term
  for (std::int64_t j = 1; j < p.n; ++j) s += theta / (theta + static_cast<double>(j));
  CHECK(s == Approx(static_cast<double>(p.k)).epsilon(1e-8));
  CHECK(theta < fit_dirichlet_theta(p, ThetaConvention::Paper));
}

TEST_CASE("digamma matches brute-force harmonic differences") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 30; ++t) {
    const double theta = 0.01 + 50.0 * std::ldexp(static_cast<double>(rng() >> 11), -53);
    const std::int64_t n = 2 + static_cast<std::int64_t>(rng() % 3000);
    double s = 0.0;
    for (std::int64_t j = 1; j < n; ++j) s += 1.0 / (theta + static_cast<double>(j));
    REQUIRE(digamma(theta + static_cast<double>(n)) - digamma(theta + 1.0) ==
            Approx(s).epsilon(1e-12));
  }
  CHECK(digamma(1.0) == Approx(-0.57721566490153286).epsilon(1e-13));
  CHECK(digamma(0.5) == Approx(-1.9635100260214235).epsilon(1e-13));
}

TEST_CASE("tau1_dirichlet") {
  SUBCASE("matches the formula with the fitted theta") {
    const auto p = make_profile({{1, 4}, {2, 3}, {3, 2}, {6, 1}});
    const double theta = fit_dirichlet_theta(p);
    const double expect = 4.0 * (static_cast<double>(p.n) + theta - 1.0) /
                          (200.0 + theta - 1.0);
    CHECK(tau1_dirichlet(p, 200.0) == Approx(expect).epsilon(1e-12));
    CHECK(tau1_dirichlet(p, 200.0) <= 4.0);
  }
  SUBCASE("Z1 = 0 short-circuits to zero") {
    CHECK(tau1_dirichlet(make_profile({{2, 3}}), 100.0) == 0.0);
    // ... even where the theta fit itself would fail (n=2, K=1)
    CHECK(tau1_dirichlet(make_profile({{2, 1}}), 100.0) == 0.0);
  }
}

TEST_CASE("fit_poisson_gamma: k_hat rule and constraint") {
  const auto p = make_profile({{1, 2}, {2, 1}});  // n=4, K=3, Z1=2
  const auto fit = fit_poisson_gamma(p, 8.0);
  CHECK(fit.k_hat == Approx(12.0).epsilon(1e-15));
  CHECK(fit.alpha * fit.beta * fit.k_hat == Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(fit_poisson_gamma(make_profile({{2, 5}}), 8.0), DomainError);  // Z1 = 0
}

TEST_CASE("fit_poisson_gamma: recovers beta on synthetic poisson-gamma data") {
  // K cells with Gamma(alpha, beta) probabilities, alpha*beta*K = 1, counts
  // Poisson(n p_j); fit with the true K supplied.
  std::mt19937_64 rng(424242);
  const std::int64_t K = 5000;
  const double beta_true = 4e-4;
  const double alpha_true = 1.0 / (static_cast<double>(K) * beta_true);  // 0.5
  const double n = 5e4;
  std::gamma_distribution<double> gamma(alpha_true, beta_true);
  std::poisson_distribution<std::int64_t> pois;
  FrequencyProfile prof;
  for (std::int64_t j = 0; j < K; ++j) {
    const double pj = gamma(rng);
    const std::int64_t y =
        pois(rng, std::poisson_distribution<std::int64_t>::param_type(n * pj));
    if (y == 0) continue;
    prof.z[y] += 1;
    prof.n += y;
    prof.k += 1;
  }
  const auto fit = fit_poisson_gamma_with_k(prof, static_cast<double>(K), n);
  CHECK(fit.beta == Approx(beta_true).epsilon(0.10));
  CHECK(fit.alpha * fit.beta * fit.k_hat == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("bethlehem and skinner closed forms") {
  SUBCASE("beta -> 0 limits with alpha held fixed") {
    CHECK(bethlehem_value(1e5, 1e6, 1.7, 0.0) == Approx(1e5).epsilon(1e-15));
    CHECK(skinner_value(5e4, 1e5, 1e6, 1.7, 0.0) == Approx(5e4).epsilon(1e-15));
  }
  SUBCASE("direct evaluation") {
    // 5e4 * (11/2)^{-2} = 200000/121
    CHECK(skinner_value(5e4, 1e5, 1e6, 1.0, 1e-5) ==
          Approx(1652.8925619834711).epsilon(1e-12));
    CHECK(bethlehem_value(1e5, 1e6, 1.0, 1e-5) == Approx(1e5 / 121.0).epsilon(1e-12));
  }
  SUBCASE("profile-level wrappers share one fit") {
    const auto p = make_profile({{1, 20}, {2, 10}, {3, 5}, {4, 2}});
    const auto fit = fit_poisson_gamma(p, 500.0);
    CHECK(tau1_bethlehem(p, 500.0) == Approx(tau1_bethlehem(p, 500.0, fit)));
    CHECK(tau1_skinner(p, 500.0) == Approx(tau1_skinner(p, 500.0, fit)));
  }
}

TEST_CASE("EstimateReport clamps into [0, Z1]") {
  EstimateReport r;
  r.name = "poisson";
  r.value = -3.5;
  CHECK(r.clamped(10) == 0.0);
  r.value = 25.0;
  CHECK(r.clamped(10) == 10.0);
  r.value = 7.25;
  CHECK(r.clamped(10) == 7.25);
}
