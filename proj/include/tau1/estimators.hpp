#ifndef TAU1_ESTIMATORS_HPP
#define TAU1_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "tau1/numeric.hpp"
#include "tau1/profile.hpp"
#include "tau1/smoothing.hpp"

namespace tau1 {

struct EstimateReport {
  std::string name;
  double value = 0.0;
  double lambda = 0.0;
  std::optional<SmoothingSpec> smoothing;
  std::map<std::string, double> fitted;

  // Convenience for practitioners; the raw value is kept because the
  // smoothed estimator legitimately goes negative.
  double clamped(std::int64_t z1) const {
    return std::max(0.0, std::min(value, static_cast<double>(z1)));
  }
};

/// Series estimator sum_i (-1)^i (i+1) lambda^i Z_{i+1}, valid for
/// lambda < 1. The alternating terms grow geometrically, so they are
/// accumulated in ascending i with compensation.
inline double tau1_unbiased(const FrequencyProfile& profile, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("tau1_unbiased: requires lambda > 0");
  if (lambda >= 1.0)
    throw DomainError("tau1_unbiased: unusable for lambda >= 1; use a smoothed estimator");
  NeumaierSum sum;
  for (const auto& [freq, count] : profile.z) {
    const std::int64_t i = freq - 1;
    const double coef = (i % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(freq) *
                        std::pow(lambda, static_cast<double>(i));
    sum.add(coef * static_cast<double>(count));
  }
  return sum.value();
}

/// Randomly truncated series sum_i c_i Z_{i+1} with
/// c_i = (-1)^i (i+1) lambda^i P(L >= i).
inline double tau1_smoothed(const FrequencyProfile& profile, double lambda,
                            const SmoothingSpec& spec) {
  if (!(lambda > 0.0)) throw DomainError("tau1_smoothed: requires lambda > 0");
  if (spec.kind == SmoothingKind::None) {
    if (lambda >= 1.0)
      throw DomainError("tau1_smoothed: smoothing 'none' is rejected for lambda >= 1");
    return tau1_unbiased(profile, lambda);
  }
  if (profile.z.empty()) return 0.0;
  const CoefficientSeq seq = coefficients(spec, lambda, profile.max_frequency() - 1);
  NeumaierSum sum;
  for (const auto& [freq, count] : profile.z) {
    const double term = seq.value(static_cast<std::size_t>(freq - 1)) * static_cast<double>(count);
    if (!std::isfinite(term))
      throw ConvergenceError("tau1_smoothed: series term overflowed at frequency " +
                             std::to_string(freq));
    sum.add(term);
  }
  const double v = sum.value();
  if (!std::isfinite(v)) throw ConvergenceError("tau1_smoothed: estimate is not finite");
  return v;
}

/// Sampling-fraction estimator Z1 * n / nbar.
inline double tau1_naive(const FrequencyProfile& profile, double nbar) {
  if (!(nbar > 0.0)) throw DomainError("tau1_naive: requires nbar > 0");
  if (static_cast<double>(profile.n) > nbar)
    throw DomainError("tau1_naive: requires nbar >= n");
  return static_cast<double>(profile.z_at(1)) * static_cast<double>(profile.n) / nbar;
}

// The sum in the concentration-parameter likelihood equation runs over
// j = 1..n-1 in the source formula; the standard exchangeable-partition sum
// starts at j = 0, which shifts the left side by one.
enum class ThetaConvention { Paper, Standard };

namespace detail {
// theta * sum_{j=1}^{n-1} 1/(theta+j), increasing in theta with supremum n-1.
inline double dp_occupancy(double theta, std::int64_t n) {
  return theta * (digamma(theta + static_cast<double>(n)) - digamma(theta + 1.0));
}
}  // namespace detail

/// Maximum likelihood concentration parameter: the unique root of
/// K_n = sum_j theta/(theta+j), found by bracketing and bisection.
inline double fit_dirichlet_theta(const FrequencyProfile& profile,
                                  ThetaConvention convention = ThetaConvention::Paper) {
  const std::int64_t n = profile.n;
  const std::int64_t k = profile.k;
  if (n < 2 || k < 1) throw DomainError("fit_dirichlet_theta: requires n >= 2 and K >= 1");
  const double target =
      convention == ThetaConvention::Paper ? static_cast<double>(k) : static_cast<double>(k - 1);
  if (target <= 0.0)
    throw DomainError("fit_dirichlet_theta: K_n = 1 has no positive root under the standard convention");
  if (target >= static_cast<double>(n - 1))
    throw DomainError("fit_dirichlet_theta: K_n at the supremum of the occupancy equation; theta unbounded");

  double lo = 0.0;
  double hi = 1.0;
  while (detail::dp_occupancy(hi, n) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw ConvergenceError("fit_dirichlet_theta: failed to bracket the root");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (detail::dp_occupancy(mid, n) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * hi) break;
  }
  return 0.5 * (lo + hi);
}

/// Dirichlet-process smoothed version of the naive estimator:
/// Z1 * (n + theta - 1) / (nbar + theta - 1).
inline double tau1_dirichlet(const FrequencyProfile& profile, double nbar,
                             ThetaConvention convention = ThetaConvention::Paper) {
  if (!(nbar > 0.0) || static_cast<double>(profile.n) > nbar)
    throw DomainError("tau1_dirichlet: requires nbar >= n > 0");
  const std::int64_t z1 = profile.z_at(1);
  if (z1 == 0) return 0.0;
  const double theta = fit_dirichlet_theta(profile, convention);
  const double n = static_cast<double>(profile.n);
  return static_cast<double>(z1) * (n + theta - 1.0) / (nbar + theta - 1.0);
}

/// Gamma-prior parameters fitted under the constraint alpha = 1/(k_hat*beta).
struct PoissonGammaFit {
  double alpha = 0.0;
  double beta = 0.0;
  double k_hat = 0.0;
};

namespace detail {

// ln Gamma(alpha+i) - ln Gamma(alpha); switches to the shifted-log expansion
// where the lgamma difference loses precision.
inline double lgamma_ratio(double alpha, std::int64_t i) {
  if (i == 0) return 0.0;
  const double di = static_cast<double>(i);
  if (alpha > 1e10) return di * std::log(alpha) + di * (di - 1.0) / (2.0 * alpha);
  return lgamma_pos(alpha + di) - lgamma_pos(alpha);
}

// Zero-truncated negative binomial log likelihood of the observed
// frequency profile, as a function of beta with alpha = 1/(k_hat*beta).
// `frame` is the Poisson offset of the marginal (the population size: the
// abundance model, the k_hat rule and the gamma scale all live on that
// scale). Terms constant in beta are dropped.
inline double zt_nb_loglik(const FrequencyProfile& profile, double k_hat, double frame,
                           double beta) {
  const double alpha = 1.0 / (k_hat * beta);
  const double m = frame * beta;
  const double log1pm = std::log1p(m);
  const double log_q = std::log(m) - log1pm;
  const double k = static_cast<double>(profile.k);
  const double n = static_cast<double>(profile.n);

  double ll = 0.0;
  for (const auto& [freq, count] : profile.z)
    ll += static_cast<double>(count) * lgamma_ratio(alpha, freq);
  ll += -alpha * k * log1pm + n * log_q;
  // P(Y >= 1) = 1 - (1+m)^{-alpha}
  const double log_p_pos = std::log(-std::expm1(-alpha * log1pm));
  ll -= k * log_p_pos;
  return ll;
}

}  // namespace detail

/// Fit (alpha, beta) by zero-truncated negative binomial maximum likelihood
/// over the occupied cells, with k_hat and the marginal frame supplied by
/// the caller. The search is a grid scan plus golden-section refinement in
/// log beta.
inline PoissonGammaFit fit_poisson_gamma_with_k(const FrequencyProfile& profile, double k_hat,
                                                double frame) {
  if (profile.n < 1 || profile.k < 1)
    throw DomainError("fit_poisson_gamma: requires a nonempty profile");
  if (!(k_hat > 0.0) || !(frame > 0.0))
    throw DomainError("fit_poisson_gamma: requires k_hat > 0 and frame > 0");

  const double t_lo = std::log(1e-14), t_hi = std::log(1e4);
  const int grid = 241;
  double best_t = t_lo, best_ll = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid; ++g) {
    const double t = t_lo + (t_hi - t_lo) * g / (grid - 1);
    const double ll = detail::zt_nb_loglik(profile, k_hat, frame, std::exp(t));
    if (std::isfinite(ll) && ll > best_ll) {
      best_ll = ll;
      best_t = t;
    }
  }
  if (!std::isfinite(best_ll))
    throw ConvergenceError("fit_poisson_gamma: likelihood not finite anywhere on the search grid");

  const double step = (t_hi - t_lo) / (grid - 1);
  double a = std::max(t_lo, best_t - step);
  double b = std::min(t_hi, best_t + step);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = detail::zt_nb_loglik(profile, k_hat, frame, std::exp(x1));
  double f2 = detail::zt_nb_loglik(profile, k_hat, frame, std::exp(x2));
  for (int iter = 0; iter < 200 && (b - a) > 1e-12; ++iter) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = detail::zt_nb_loglik(profile, k_hat, frame, std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = detail::zt_nb_loglik(profile, k_hat, frame, std::exp(x1));
    }
  }
  const double beta = std::exp(0.5 * (a + b));
  if (!std::isfinite(detail::zt_nb_loglik(profile, k_hat, frame, beta)))
    throw ConvergenceError("fit_poisson_gamma: likelihood not finite at the located optimum");
  PoissonGammaFit fit;
  fit.beta = beta;
  fit.k_hat = k_hat;
  fit.alpha = 1.0 / (k_hat * beta);
  return fit;
}

/// As above with the population cell count estimated by
/// k_hat = nbar * K_n / Z1 (uniform-occupancy rule) and the marginal framed
/// at the population size.
inline PoissonGammaFit fit_poisson_gamma(const FrequencyProfile& profile, double nbar) {
  const std::int64_t z1 = profile.z_at(1);
  if (z1 < 1)
    throw DomainError("fit_poisson_gamma: Z1 = 0, population cell count k_hat is undefined");
  const double k_hat = nbar * static_cast<double>(profile.k) / static_cast<double>(z1);
  return fit_poisson_gamma_with_k(profile, k_hat, nbar);
}

inline double bethlehem_value(double n, double nbar, double alpha, double beta) {
  return n * std::exp(-(1.0 + alpha) * std::log1p(nbar * beta));
}

inline double skinner_value(double k_n, double n, double nbar, double alpha, double beta) {
  return k_n * std::exp(-(1.0 + alpha) * (std::log1p(nbar * beta) - std::log1p(n * beta)));
}

/// Sample portion of the estimated population uniques under the
/// Poisson-Gamma model: n (1 + nbar beta)^{-(1+alpha)}.
inline double tau1_bethlehem(const FrequencyProfile& profile, double nbar,
                             const PoissonGammaFit& fit) {
  return bethlehem_value(static_cast<double>(profile.n), nbar, fit.alpha, fit.beta);
}

inline double tau1_bethlehem(const FrequencyProfile& profile, double nbar) {
  return tau1_bethlehem(profile, nbar, fit_poisson_gamma(profile, nbar));
}

/// K_n ((1 + nbar beta)/(1 + n beta))^{-(1+alpha)} under the same model.
inline double tau1_skinner(const FrequencyProfile& profile, double nbar,
                           const PoissonGammaFit& fit) {
  return skinner_value(static_cast<double>(profile.k), static_cast<double>(profile.n), nbar,
                       fit.alpha, fit.beta);
}

inline double tau1_skinner(const FrequencyProfile& profile, double nbar) {
  return tau1_skinner(profile, nbar, fit_poisson_gamma(profile, nbar));
}

}  // namespace tau1

#endif  // TAU1_ESTIMATORS_HPP
