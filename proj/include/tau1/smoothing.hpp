#ifndef TAU1_SMOOTHING_HPP
#define TAU1_SMOOTHING_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tau1/numeric.hpp"

namespace tau1 {

enum class SmoothingKind { None, Poisson, Binomial };

/// Distribution of the random truncation point L. `None` stands for no
/// truncation (every tail probability is 1).
struct SmoothingSpec {
  SmoothingKind kind = SmoothingKind::None;
  double beta = 0.0;     // Poisson rate
  std::int64_t x0 = 0;   // Binomial trial count
  double p = 0.0;        // Binomial success probability

  static SmoothingSpec none() { return {}; }

  static SmoothingSpec poisson(double beta) {
    if (!(beta > 0.0)) throw DomainError("SmoothingSpec: Poisson requires beta > 0");
    SmoothingSpec s;
    s.kind = SmoothingKind::Poisson;
    s.beta = beta;
    return s;
  }

  static SmoothingSpec binomial(std::int64_t x0, double p) {
    if (x0 < 0) throw DomainError("SmoothingSpec: Binomial requires x0 >= 0");
    // tails are computed by direct pmf summation, which assumes small x0
    if (x0 > 100000) throw DomainError("SmoothingSpec: Binomial x0 too large for direct tail summation");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("SmoothingSpec: Binomial requires 0 < p < 1");
    SmoothingSpec s;
    s.kind = SmoothingKind::Binomial;
    s.x0 = x0;
    s.p = p;
    return s;
  }

  // Success probability 2/(lambda+2).
  static SmoothingSpec binomial2(double lambda, std::int64_t x0) {
    return binomial(x0, 2.0 / (lambda + 2.0));
  }

  // Success probability 1/(lambda+1): truncated Euler transformation of the
  // series. No optimal x0 is provided for this variant.
  static SmoothingSpec binomial_euler(double lambda, std::int64_t x0) {
    return binomial(x0, 1.0 / (lambda + 1.0));
  }

  std::string name() const {
    switch (kind) {
      case SmoothingKind::None: return "none";
      case SmoothingKind::Poisson: return "poisson";
      case SmoothingKind::Binomial: return "binomial";
    }
    return "?";
  }
};

/// log P(L >= i). Poisson tails are accumulated in log space so that deep
/// tails stay meaningful; Binomial tails use direct pmf summation, which is
/// exact for the small x0 arising in practice.
inline double log_tail_probability(const SmoothingSpec& spec, std::int64_t i) {
  if (i < 0) throw DomainError("tail_probability: requires i >= 0");
  if (i == 0) return 0.0;
  switch (spec.kind) {
    case SmoothingKind::None:
      return 0.0;
    case SmoothingKind::Poisson: {
      // log sum_{k>=i} beta^k/k! - beta, summed until terms stop mattering.
      const double log_beta = std::log(spec.beta);
      double log_term = static_cast<double>(i) * log_beta - lgamma_pos(static_cast<double>(i) + 1.0);
      double log_sum = log_term;
      for (std::int64_t k = i + 1;; ++k) {
        log_term += log_beta - std::log(static_cast<double>(k));
        log_sum = log_add_exp(log_sum, log_term);
        if (log_term < log_sum - 60.0 && static_cast<double>(k) > spec.beta) break;
      }
      const double lt = log_sum - spec.beta;
      return lt > 0.0 ? 0.0 : lt;  // clamp rounding at the i <= beta end
    }
    case SmoothingKind::Binomial: {
      if (i > spec.x0) return kNegInf;
      double tail = 0.0;
      for (std::int64_t k = i; k <= spec.x0; ++k) {
        const double log_pmf = lgamma_pos(static_cast<double>(spec.x0) + 1.0) -
                               lgamma_pos(static_cast<double>(k) + 1.0) -
                               lgamma_pos(static_cast<double>(spec.x0 - k) + 1.0) +
                               static_cast<double>(k) * std::log(spec.p) +
                               static_cast<double>(spec.x0 - k) * std::log1p(-spec.p);
        tail += std::exp(log_pmf);
      }
      return std::log(std::min(tail, 1.0));
    }
  }
  throw DomainError("tail_probability: invalid spec");
}

inline double tail_probability(const SmoothingSpec& spec, std::int64_t i) {
  return std::exp(log_tail_probability(spec, i));
}

/// Signed series coefficients c_i = (-1)^i (i+1) lambda^i P(L >= i), held as
/// (sign, log|c_i|) so that lambda^i never overflows along the way.
struct CoefficientSeq {
  std::vector<double> log_abs;
  std::vector<int> sign;

  std::size_t size() const { return log_abs.size(); }

  double value(std::size_t i) const {
    return sign[i] == 0 ? 0.0 : static_cast<double>(sign[i]) * std::exp(log_abs[i]);
  }
};

inline CoefficientSeq coefficients(const SmoothingSpec& spec, double lambda, std::int64_t max_i) {
  if (!(lambda > 0.0)) throw DomainError("coefficients: requires lambda > 0");
  if (max_i < 0) throw DomainError("coefficients: requires max_i >= 0");
  CoefficientSeq seq;
  seq.log_abs.reserve(static_cast<std::size_t>(max_i) + 1);
  seq.sign.reserve(static_cast<std::size_t>(max_i) + 1);
  const double log_lambda = std::log(lambda);
  for (std::int64_t i = 0; i <= max_i; ++i) {
    const double lt = log_tail_probability(spec, i);
    if (lt == kNegInf) {
      seq.log_abs.push_back(kNegInf);
      seq.sign.push_back(0);
      continue;
    }
    seq.log_abs.push_back(std::log1p(static_cast<double>(i)) + static_cast<double>(i) * log_lambda + lt);
    seq.sign.push_back(i % 2 == 0 ? 1 : -1);
  }
  return seq;
}

/// beta that minimizes the Poisson-smoothed MSE bound:
/// (1/(4 lambda)) log(n/(2 lambda - 1)), natural logarithm.
inline double optimal_poisson_beta(double lambda, double n) {
  if (!(lambda >= 1.0)) throw DomainError("optimal_poisson_beta: requires lambda >= 1");
  if (!(n > 2.0 * lambda - 1.0))
    throw DomainError("optimal_poisson_beta: requires n > 2*lambda - 1");
  return std::log(n / (2.0 * lambda - 1.0)) / (4.0 * lambda);
}

/// x0 that minimizes the Binomial(x0, 2/(lambda+2)) MSE bound. An interior
/// value in (0,1] clamps to 0: Binomial(0, p) degenerates to L == 0, a safe
/// fallback equal to Z1.
inline std::int64_t optimal_binomial_x0(double lambda, double n) {
  if (!(lambda >= 1.0)) throw DomainError("optimal_binomial_x0: requires lambda >= 1");
  const double pow3 = std::exp((10.0 / 3.0) * std::log(3.0));
  const double denom = (lambda + 1.0) * (lambda * lambda * (pow3 - 1.0) - 4.0 * lambda - 4.0);
  const double arg = n * lambda * lambda / denom;
  if (!(arg > 0.0))
    throw DomainError("optimal_binomial_x0: nonpositive log argument (n*lambda^2/denominator = " +
                      std::to_string(arg) + ")");
  const double interior = 0.3 * std::log(arg) / std::log(3.0);
  if (interior <= 0.0) return 0;
  return static_cast<std::int64_t>(std::floor(interior));
}

}  // namespace tau1

#endif  // TAU1_SMOOTHING_HPP
