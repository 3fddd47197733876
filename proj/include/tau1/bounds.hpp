#ifndef TAU1_BOUNDS_HPP
#define TAU1_BOUNDS_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tau1/numeric.hpp"
#include "tau1/smoothing.hpp"

namespace tau1 {

/// Index of the largest-magnitude series coefficient for lambda < 1:
/// floor((2 lambda - 1)/(1 - lambda)), clamped at 0.
inline std::int64_t j_star(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("j_star: requires 0 < lambda < 1");
  const double x = (2.0 * lambda - 1.0) / (1.0 - lambda);
  if (x <= 0.0) return 0;
  // snap values that should be exact integers before flooring
  return static_cast<std::int64_t>(std::floor(x + 1e-9));
}

/// Psi(lambda) = (j* + 1) lambda^{j*}, the peak coefficient magnitude.
inline double psi(double lambda) {
  const std::int64_t j = j_star(lambda);
  return static_cast<double>(j + 1) * std::pow(lambda, static_cast<double>(j));
}

/// Variance bound for the untruncated estimator, lambda < 1:
/// Psi^2(lambda) E[Zbar_1] - E[Z_1(population)]/(lambda + 1).
inline double variance_bound_lt1(double lambda, double e_zbar1, double e_z1_pop) {
  const double ps = psi(lambda);  // rejects lambda outside (0,1)
  return ps * ps * e_zbar1 - e_z1_pop / (lambda + 1.0);
}

/// A(lambda) = 2 lambda / (2 lambda - 1)^{1 - 1/(2 lambda)}.
inline double poisson_nmse_coefficient(double lambda) {
  if (!(lambda >= 1.0)) throw DomainError("poisson_nmse_coefficient: requires lambda >= 1");
  return 2.0 * lambda / std::pow(2.0 * lambda - 1.0, 1.0 - 1.0 / (2.0 * lambda));
}

/// MSE bound with Poisson(beta) smoothing: e^{-2 beta} n^2 + n e^{2 beta (2 lambda - 1)}.
inline double mse_bound_poisson(double lambda, double n, double beta) {
  if (!(lambda >= 1.0)) throw DomainError("mse_bound_poisson: requires lambda >= 1");
  if (!(n > 0.0) || !(beta > 0.0)) throw DomainError("mse_bound_poisson: requires n, beta > 0");
  return std::exp(-2.0 * beta) * n * n + n * std::exp(2.0 * beta * (2.0 * lambda - 1.0));
}

/// Worst-case NMSE bound at the optimal beta: A(lambda) / n^{1/(2 lambda)}.
inline double nmse_bound_poisson(double lambda, double n) {
  if (!(n > 2.0 * lambda - 1.0)) throw DomainError("nmse_bound_poisson: requires n > 2*lambda - 1");
  return poisson_nmse_coefficient(lambda) / std::pow(n, 1.0 / (2.0 * lambda));
}

/// Rate exponent of the Binomial(x0, 2/(lambda+2)) bound: 3 log_3(1 + 2/lambda) / 5.
inline double binomial2_nmse_exponent(double lambda) {
  if (!(lambda >= 1.0)) throw DomainError("binomial2_nmse_exponent: requires lambda >= 1");
  return 3.0 * (std::log1p(2.0 / lambda) / std::log(3.0)) / 5.0;
}

/// MSE bound with Binomial(x0, 2/(lambda+2)) smoothing:
/// n (lambda/(lambda+2))^{2 x0} [3^{10 x0 / 3} + n (lambda/(2(lambda+1)))^2].
inline double mse_bound_binomial2(double lambda, double n, std::int64_t x0) {
  if (!(lambda >= 1.0)) throw DomainError("mse_bound_binomial2: requires lambda >= 1");
  if (!(n > 0.0) || x0 < 0) throw DomainError("mse_bound_binomial2: requires n > 0 and x0 >= 0");
  const double dx0 = static_cast<double>(x0);
  const double damp = std::pow(lambda / (lambda + 2.0), 2.0 * dx0);
  const double blow = std::exp((10.0 * dx0 / 3.0) * std::log(3.0));
  const double half = lambda / (2.0 * (lambda + 1.0));
  return n * damp * (blow + n * half * half);
}

namespace detail {
// Leading constant of the normalized Binomial(x0, 2/(lambda+2)) bound at the
// unfloored optimal x0: the n-dependence cancels and what remains is
// D^{-(3/5) log_3(1+2/lambda)} (D + E) with
// D = lambda^2/((lambda+1)(lambda^2(3^{10/3}-1) - 4 lambda - 4)) and
// E = (lambda/(2(lambda+1)))^2.
inline double binomial2_leading_d(double lambda) {
  const double pow3 = std::exp((10.0 / 3.0) * std::log(3.0));
  return lambda * lambda /
         ((lambda + 1.0) * (lambda * lambda * (pow3 - 1.0) - 4.0 * lambda - 4.0));
}
}  // namespace detail

inline double binomial2_nmse_coefficient(double lambda) {
  if (!(lambda >= 1.0)) throw DomainError("binomial2_nmse_coefficient: requires lambda >= 1");
  const double d = detail::binomial2_leading_d(lambda);
  const double e = std::pow(lambda / (2.0 * (lambda + 1.0)), 2.0);
  return std::pow(d, -binomial2_nmse_exponent(lambda)) * (d + e);
}

/// Worst-case NMSE bound at the optimal x0: C(lambda) / n^{3 log_3(1+2/lambda)/5}.
inline double nmse_bound_binomial2(double lambda, double n) {
  if (!(n > 0.0)) throw DomainError("nmse_bound_binomial2: requires n > 0");
  return binomial2_nmse_coefficient(lambda) / std::pow(n, binomial2_nmse_exponent(lambda));
}

/// max_{lambda >= 1} A(lambda); A is decreasing from A(1) = 2 toward 1, the
/// grid scan guards the claim rather than assuming it.
inline double poisson_nmse_constant() {
  static const double a_max = [] {
    double m = 0.0;
    for (int i = 0; i <= 20000; ++i) m = std::max(m, poisson_nmse_coefficient(1.0 + i * 0.01));
    return m;
  }();
  return a_max;
}

inline double binomial2_nmse_constant() {
  static const double c_max = [] {
    double m = 0.0;
    for (int i = 0; i <= 20000; ++i) m = std::max(m, binomial2_nmse_coefficient(1.0 + i * 0.01));
    return m;
  }();
  return c_max;
}

enum class SmoothingFamily { Poisson, Binomial2 };

/// Asymptotic coefficient of log n in the largest lambda whose worst-case
/// NMSE can be pushed below delta: 1/(2 log(A/delta)) for Poisson smoothing,
/// 6/(5 log 3 log(C/delta)) for Binomial smoothing.
inline double predictability_limit(SmoothingFamily family, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("predictability_limit: requires 0 < delta < 1");
  switch (family) {
    case SmoothingFamily::Poisson: {
      const double a = poisson_nmse_constant();
      if (!(delta < a)) throw DomainError("predictability_limit: requires delta < A");
      return 1.0 / (2.0 * std::log(a / delta));
    }
    case SmoothingFamily::Binomial2: {
      const double c = binomial2_nmse_constant();
      if (!(delta < c)) throw DomainError("predictability_limit: requires delta < C");
      return 6.0 / (5.0 * std::log(3.0) * std::log(c / delta));
    }
  }
  throw DomainError("predictability_limit: invalid family");
}

/// Minimax lower-bound curve, valid under lambda + 1 > e^2. K is the
/// caller's constant; no universal constant is hard-coded.
inline double minimax_lower_bound(double lambda, double n, double K) {
  const double e2 = std::exp(2.0);
  if (!(lambda + 1.0 > e2))
    throw DomainError("minimax_lower_bound: hypothesis lambda + 1 > e^2 violated");
  if (!(n >= 3.0)) throw DomainError("minimax_lower_bound: requires n >= 3");
  const double log_n = std::log(n);
  if (lambda + 1.0 > log_n) return K;
  const double base = std::sqrt(log_n) / (n * (1.0 + lambda));
  return K * ((1.0 + lambda) / log_n) * std::pow(base, e2 / (1.0 + lambda));
}

// ---- curve emission for the CLI -------------------------------------------

struct BoundCurvePoint {
  std::string kind;
  double lambda = 0.0;
  double n = 0.0;  // 0 for n-independent kinds
  double value = 0.0;
};

inline std::vector<BoundCurvePoint> bound_curves(double lambda_min, double lambda_max, int steps,
                                                 const std::vector<double>& ns, double K = 1.0) {
  if (!(lambda_min >= 1.0) || !(lambda_max >= lambda_min) || steps < 1)
    throw DomainError("bound_curves: requires 1 <= lambda_min <= lambda_max and steps >= 1");
  std::vector<BoundCurvePoint> rows;
  const double e2 = std::exp(2.0);
  for (int s = 0; s <= steps; ++s) {
    const double lambda =
        steps == 0 ? lambda_min : lambda_min + (lambda_max - lambda_min) * s / steps;
    rows.push_back({"A", lambda, 0.0, poisson_nmse_coefficient(lambda)});
    rows.push_back({"C", lambda, 0.0, binomial2_nmse_coefficient(lambda)});
    for (double n : ns) {
      if (n > 2.0 * lambda - 1.0) {
        rows.push_back({"nmse_poisson", lambda, n, nmse_bound_poisson(lambda, n)});
        const double bt = optimal_poisson_beta(lambda, n);
        rows.push_back({"beta_tilde", lambda, n, bt});
        rows.push_back({"mse_poisson", lambda, n, mse_bound_poisson(lambda, n, bt)});
      }
      rows.push_back({"nmse_binomial2", lambda, n, nmse_bound_binomial2(lambda, n)});
      const std::int64_t x0 = optimal_binomial_x0(lambda, n);
      rows.push_back({"x0_tilde", lambda, n, static_cast<double>(x0)});
      rows.push_back({"mse_binomial2", lambda, n, mse_bound_binomial2(lambda, n, x0)});
      if (lambda + 1.0 > e2 && n >= 3.0)
        rows.push_back({"minimax_lower", lambda, n, minimax_lower_bound(lambda, n, K)});
    }
  }
  return rows;
}

}  // namespace tau1

#endif  // TAU1_BOUNDS_HPP
