#ifndef TAU1_POLYAPPROX_HPP
#define TAU1_POLYAPPROX_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tau1/ddreal.hpp"
#include "tau1/numeric.hpp"

namespace tau1 {

// ---- modified Bessel function of the first kind ---------------------------

/// log I_k(z) from the power series sum_p (z/2)^{2p+k} / (p! (p+k)!),
/// accumulated in log space. Terms are added until they stop contributing
/// relative to the running sum, never stopping before the series peak.
inline double log_bessel_i(std::int64_t k, double z) {
  if (k < 0) throw DomainError("log_bessel_i: requires k >= 0");
  if (!(z >= 0.0)) throw DomainError("log_bessel_i: requires z >= 0");
  if (z == 0.0) return k == 0 ? 0.0 : kNegInf;
  const double log_half_z = std::log(0.5 * z);
  const double quarter_z2 = 0.25 * z * z;
  double log_term = static_cast<double>(k) * log_half_z - lgamma_pos(static_cast<double>(k) + 1.0);
  double log_sum = log_term;
  for (std::int64_t p = 1; p < 100000; ++p) {
    const double dp = static_cast<double>(p);
    log_term += 2.0 * log_half_z - std::log(dp) - std::log(dp + static_cast<double>(k));
    log_sum = log_add_exp(log_sum, log_term);
    const bool past_peak = dp * (dp + static_cast<double>(k)) > quarter_z2;
    if (past_peak && log_term < log_sum + std::log(1e-16)) break;
  }
  return log_sum;
}

/// I_k(z) in direct space; z capped so exp cannot overflow.
inline double bessel_i(std::int64_t k, double z) {
  if (!(z <= 700.0)) throw DomainError("bessel_i: z > 700, use log_bessel_i");
  return std::exp(log_bessel_i(k, z));
}

/// e^{-z} I_k(z), stable for large z.
inline double bessel_i_scaled(std::int64_t k, double z) {
  return std::exp(log_bessel_i(k, z) - z);
}

/// Lower bound on e^{-z} I_k(z) for z > 8 sqrt(1+(k/z)^2):
/// exp(-k^2/(2z)) / (2 e^4 (1+(k/z)^2)^{1/4} sqrt(z)).
inline double bessel_lower_bound(std::int64_t k, double z) {
  if (k < 0) throw DomainError("bessel_lower_bound: requires k >= 0");
  const double ratio2 = (static_cast<double>(k) / z) * (static_cast<double>(k) / z);
  if (!(z > 8.0 * std::sqrt(1.0 + ratio2)))
    throw DomainError("bessel_lower_bound: requires z > 8 sqrt(1 + (k/z)^2)");
  return std::exp(-static_cast<double>(k) * static_cast<double>(k) / (2.0 * z)) /
         (2.0 * std::exp(4.0) * std::pow(1.0 + ratio2, 0.25) * std::sqrt(z));
}

// ---- best uniform polynomial approximation (Remez exchange) ---------------

using RemezFunction = std::function<DdReal(const DdReal&)>;

struct BestApproxResult {
  double error = 0.0;                     // E_L
  std::vector<double> coeffs;             // Chebyshev-basis coefficients on [a,b]
  std::vector<double> alternation_points; // ascending, |residual| = error at each
  int iterations = 0;

  // extended-precision view, needed to verify equioscillation when E_L sits
  // far below the double precision floor
  std::vector<DdReal> coeffs_dd;
  double a = 0.0, b = 0.0;

  DdReal evaluate_dd(const DdReal& x) const {
    // Clenshaw on t = (2x - (a+b)) / (b-a)
    const DdReal t = (DdReal(2.0) * x - DdReal(a + b)) / DdReal(b - a);
    const DdReal two_t = DdReal(2.0) * t;
    DdReal b1(0.0L), b2(0.0L);
    for (std::size_t j = coeffs_dd.size(); j-- > 1;) {
      const DdReal tmp = two_t * b1 - b2 + coeffs_dd[j];
      b2 = b1;
      b1 = tmp;
    }
    return t * b1 - b2 + coeffs_dd[0];
  }

  DdReal residual_dd(const RemezFunction& f, const DdReal& x) const {
    return f(x) - evaluate_dd(x);
  }
};

namespace remez_detail {

// Solve the (L+2)x(L+2) levelling system by Gaussian elimination with
// partial pivoting, all in extended precision.
inline std::vector<DdReal> solve(std::vector<std::vector<DdReal>>& m, std::vector<DdReal>& rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (dd_abs(m[r][col]) > dd_abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    if (m[col][col] == DdReal(0.0L)) throw ConvergenceError("remez: singular levelling system");
    for (std::size_t r = col + 1; r < n; ++r) {
      const DdReal factor = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= factor * m[col][c];
      rhs[r] -= factor * rhs[col];
    }
  }
  std::vector<DdReal> x(n);
  for (std::size_t r = n; r-- > 0;) {
    DdReal acc = rhs[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= m[r][c] * x[c];
    x[r] = acc / m[r][r];
  }
  return x;
}

struct Extremum {
  double x;
  int sign;
  DdReal mag;  // |residual|
};

}  // namespace remez_detail

/// Best degree-L polynomial approximation of f on [a,b] in the uniform norm,
/// computed by the exchange algorithm from a Chebyshev-point reference.
/// Iterates until the levelled error matches the observed maximum deviation
/// to 1e-10 relative.
inline BestApproxResult remez_best_approx(const RemezFunction& f, double a, double b, int degree) {
  if (!(a < b)) throw DomainError("remez_best_approx: requires a < b");
  if (degree < 0 || degree > 60)
    throw DomainError("remez_best_approx: degree must be in [0, 60]");

  const std::size_t m = static_cast<std::size_t>(degree) + 2;  // reference size
  const double mid = 0.5 * (a + b), halfw = 0.5 * (b - a);

  std::vector<double> ref(m);
  for (std::size_t j = 0; j < m; ++j)
    ref[j] = mid - halfw * std::cos(M_PI * static_cast<double>(j) / static_cast<double>(m - 1));
  ref.front() = a;
  ref.back() = b;

  const int scan_n = std::max(257, 48 * static_cast<int>(m));
  std::vector<double> grid(static_cast<std::size_t>(scan_n) + 1);
  for (int i = 0; i <= scan_n; ++i)
    grid[static_cast<std::size_t>(i)] = mid - halfw * std::cos(M_PI * i / scan_n);
  grid.front() = a;
  grid.back() = b;

  BestApproxResult result;
  result.a = a;
  result.b = b;

  auto cheb_row = [&](double x) {
    const DdReal t = (DdReal(2.0) * DdReal(x) - DdReal(a + b)) / DdReal(b - a);
    std::vector<DdReal> row(static_cast<std::size_t>(degree) + 1);
    row[0] = DdReal(1.0L);
    if (degree >= 1) row[1] = t;
    for (int k = 2; k <= degree; ++k)
      row[static_cast<std::size_t>(k)] =
          DdReal(2.0) * t * row[static_cast<std::size_t>(k - 1)] - row[static_cast<std::size_t>(k - 2)];
    return row;
  };

  DdReal levelled(0.0L);
  for (int iter = 1; iter <= 100; ++iter) {
    // levelling solve: p(x_j) + (-1)^j E = f(x_j)
    std::vector<std::vector<DdReal>> mat(m, std::vector<DdReal>(m));
    std::vector<DdReal> rhs(m);
    for (std::size_t j = 0; j < m; ++j) {
      auto row = cheb_row(ref[j]);
      for (std::size_t c = 0; c + 1 < m; ++c) mat[j][c] = row[c];
      mat[j][m - 1] = DdReal(j % 2 == 0 ? 1.0L : -1.0L);
      rhs[j] = f(DdReal(ref[j]));
    }
    auto sol = remez_detail::solve(mat, rhs);
    result.coeffs_dd.assign(sol.begin(), sol.end() - 1);
    levelled = sol.back();
    result.iterations = iter;

    // locate extrema of the residual between its sign changes
    std::vector<DdReal> r(grid.size());
    DdReal scale(0.0L);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      r[i] = result.residual_dd(f, DdReal(grid[i]));
      const DdReal av = dd_abs(f(DdReal(grid[i])));
      if (av > scale) scale = av;
    }
    const DdReal floor_mag = dd_ldexp(scale + DdReal(1.0L), -108);

    auto sign_of = [&](const DdReal& v) {
      if (dd_abs(v) <= floor_mag) return 0;
      return v.hi < 0.0L || (v.hi == 0.0L && v.lo < 0.0L) ? -1 : 1;
    };

    std::vector<remez_detail::Extremum> extrema;
    std::size_t run_start = 0;
    int run_sign = sign_of(r[0]);
    auto flush_run = [&](std::size_t run_end) {
      if (run_sign == 0) return;
      std::size_t best = run_start;
      for (std::size_t i = run_start; i <= run_end; ++i)
        if (dd_abs(r[i]) > dd_abs(r[best])) best = i;
      // golden-section polish inside the bracketing cells
      double lo = grid[best == 0 ? 0 : best - 1];
      double hi = grid[best + 1 >= grid.size() ? grid.size() - 1 : best + 1];
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
      DdReal s(run_sign == -1 ? -1.0L : 1.0L);
      DdReal f1 = s * result.residual_dd(f, DdReal(x1));
      DdReal f2 = s * result.residual_dd(f, DdReal(x2));
      for (int it = 0; it < 60 && hi - lo > 1e-14 * (b - a); ++it) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + gr * (hi - lo);
          f2 = s * result.residual_dd(f, DdReal(x2));
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - gr * (hi - lo);
          f1 = s * result.residual_dd(f, DdReal(x1));
        }
      }
      const double xb = 0.5 * (lo + hi);
      DdReal mag = dd_abs(result.residual_dd(f, DdReal(xb)));
      const DdReal mag_grid = dd_abs(r[best]);
      if (mag_grid > mag) {
        extrema.push_back({grid[best], run_sign, mag_grid});
      } else {
        extrema.push_back({xb, run_sign, mag});
      }
    };
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const int s = sign_of(r[i]);
      if (s == run_sign) continue;
      if (run_sign != 0) flush_run(i - 1);
      run_start = i;
      run_sign = s;
    }
    if (run_sign != 0) flush_run(grid.size() - 1);

    // a below-floor dip can split one lobe into two same-sign runs; keep the
    // stronger representative so the set stays strictly alternating
    for (std::size_t i = 1; i < extrema.size();) {
      if (extrema[i].sign == extrema[i - 1].sign) {
        if (extrema[i].mag > extrema[i - 1].mag)
          extrema.erase(extrema.begin() + static_cast<std::ptrdiff_t>(i) - 1);
        else
          extrema.erase(extrema.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }

    if (extrema.size() < m) {
      // residual is flat at working precision: degree-L polynomial already
      // interpolates f (constant f, or f itself polynomial)
      DdReal max_dev(0.0L);
      for (const auto& e : extrema)
        if (e.mag > max_dev) max_dev = e.mag;
      if (max_dev <= floor_mag || dd_abs(levelled) <= floor_mag) {
        result.error = dd_abs(levelled).to_double();
        result.alternation_points.assign(ref.begin(), ref.end());
        break;
      }
      throw ConvergenceError("remez: lost the alternation set");
    }

    // trim to exactly L+2 extrema, dropping the weaker endpoint
    while (extrema.size() > m) {
      if (extrema.front().mag < extrema.back().mag)
        extrema.erase(extrema.begin());
      else
        extrema.pop_back();
    }

    DdReal max_dev(0.0L), min_dev = extrema.front().mag;
    for (const auto& e : extrema) {
      if (e.mag > max_dev) max_dev = e.mag;
      if (e.mag < min_dev) min_dev = e.mag;
    }
    for (std::size_t j = 0; j < m; ++j) ref[j] = extrema[j].x;

    const DdReal lev_abs = dd_abs(levelled);
    const DdReal gap = max_dev - lev_abs;
    if (gap <= DdReal(1e-10L) * max_dev || max_dev <= floor_mag) {
      result.error = max_dev.to_double();
      result.alternation_points = ref;
      break;
    }
    if (iter == 100)
      throw ConvergenceError("remez: no convergence after 100 exchange iterations");
  }

  result.coeffs.resize(result.coeffs_dd.size());
  for (std::size_t i = 0; i < result.coeffs.size(); ++i)
    result.coeffs[i] = result.coeffs_dd[i].to_double();
  if (result.alternation_points.empty())
    result.alternation_points.assign(ref.begin(), ref.end());
  return result;
}

// ---- the (xi, B, L) approximation problem ----------------------------------

/// Target of the appendix study: g(x) = exp(-2Bx) on [1/xi, 1], equivalently
/// gamma(x) = exp(-C(x+1)) on [-1,1] with C = B(1 - 1/xi).
struct PolyApproxProblem {
  double xi = 0.0;
  double B = 0.0;
  int L = 0;
  double S = 0.0;  // populated when built from (n, lambda)
  double n = 0.0, lambda = 0.0, c0 = 0.0;

  double interval_lo() const { return 1.0 / xi; }
  double C() const { return B * (1.0 - 1.0 / xi); }

  static PolyApproxProblem from_params(double xi, double B, int L) {
    if (!(xi > 1.0)) throw DomainError("PolyApproxProblem: requires xi > 1");
    if (!(B > 0.0)) throw DomainError("PolyApproxProblem: requires B > 0");
    if (L < 0) throw DomainError("PolyApproxProblem: requires L >= 0");
    PolyApproxProblem p;
    p.xi = xi;
    p.B = B;
    p.L = L;
    return p;
  }

  /// xi = (2 c0 / e) min{(1+lambda) log n, log^2 n}, S the integer cover of
  /// n(1+lambda), B = n(1+lambda) xi / (2S). The default c0 = 1/e.
  static PolyApproxProblem from_model(double n, double lambda, int L,
                                      double c0 = std::exp(-1.0)) {
    if (!(n > 1.0) || !(lambda > 0.0) || !(c0 > 0.0))
      throw DomainError("PolyApproxProblem: requires n > 1, lambda > 0, c0 > 0");
    const double log_n = std::log(n);
    const double xi = (2.0 * c0 / std::exp(1.0)) * std::min((1.0 + lambda) * log_n, log_n * log_n);
    const double s = std::ceil(n * (1.0 + lambda));
    const double B = n * (1.0 + lambda) * xi / (2.0 * s);
    auto p = from_params(xi, B, L);
    p.S = s;
    p.n = n;
    p.lambda = lambda;
    p.c0 = c0;
    // B always lands inside [xi/2/(1 + 1/(n(1+lambda))), xi/2]
    const double lo = 0.5 * xi / (1.0 + 1.0 / (n * (1.0 + lambda)));
    if (B < lo * (1.0 - 1e-12) || B > 0.5 * xi * (1.0 + 1e-12))
      throw DomainError("PolyApproxProblem: B outside its admissible band");
    return p;
  }

  RemezFunction gamma_function() const {
    const DdReal c = DdReal(B) * (DdReal(1.0) - DdReal(1.0) / DdReal(xi));
    return [c](const DdReal& x) { return dd_exp(-(c * (x + DdReal(1.0)))); };
  }

  RemezFunction g_function() const {
    const DdReal two_b = DdReal(2.0) * DdReal(B);
    return [two_b](const DdReal& x) { return dd_exp(-(two_b * x)); };
  }
};

struct AppendixBoundsReport {
  PolyApproxProblem problem;
  double E_gamma = 0.0;       // E_L(gamma, [-1,1])
  double E_g = 0.0;           // E_L(g, [1/xi, 1])
  double rescale_factor = 0.0;  // exp(-2B/xi)
  double rescale_rel_err = 0.0;
  std::vector<double> eq19_per_k;  // K e^{-C} I_{L+4K}(C) for K = 1..ceil(C)
  double eq19_lower = 0.0;
  int eq19_argmax_k = 0;
  bool eq19_holds = false;
  int thm5_branch = 0;  // 1: L <= sqrt(xi/2); 2: larger L
  double thm5_value = 0.0;
  double implied_constant = 0.0;  // E_g / thm5_value
  int alternations = 0;
};

/// Evaluate both sides of the appendix inequalities for one problem:
/// the exchange-algorithm value of E_L, the Bessel-sum lower bound, the
/// interval-rescaling identity, and the asymptotic lower-bound formula with
/// its implied constant.
inline AppendixBoundsReport verify_appendix_bounds(const PolyApproxProblem& problem) {
  AppendixBoundsReport rep;
  rep.problem = problem;
  const double c = problem.C();

  const auto gamma_res = remez_best_approx(problem.gamma_function(), -1.0, 1.0, problem.L);
  rep.E_gamma = gamma_res.error;
  rep.alternations = static_cast<int>(gamma_res.alternation_points.size());

  const auto g_res = remez_best_approx(problem.g_function(), problem.interval_lo(), 1.0, problem.L);
  rep.E_g = g_res.error;
  rep.rescale_factor = std::exp(-2.0 * problem.B / problem.xi);
  rep.rescale_rel_err = std::abs(rep.E_g - rep.rescale_factor * rep.E_gamma) / rep.E_g;

  const int k_max = static_cast<int>(std::ceil(c));
  for (int k = 1; k <= k_max; ++k) {
    const double v = k * std::exp(log_bessel_i(problem.L + 4 * k, c) - c);
    rep.eq19_per_k.push_back(v);
    if (v > rep.eq19_lower) {
      rep.eq19_lower = v;
      rep.eq19_argmax_k = k;
    }
  }
  rep.eq19_holds = rep.E_gamma >= rep.eq19_lower;

  const double l = static_cast<double>(problem.L);
  if (l * l <= problem.xi / 2.0) {
    rep.thm5_branch = 1;
    rep.thm5_value = 1.0;
  } else {
    rep.thm5_branch = 2;
    const double ratio = 2.0 * l / problem.xi;
    rep.thm5_value = std::sqrt(problem.xi) * std::exp(-l * l / problem.xi) /
                     (l * std::pow(1.0 + ratio * ratio, 0.25));
  }
  rep.implied_constant = rep.E_g / rep.thm5_value;
  return rep;
}

}  // namespace tau1

#endif  // TAU1_POLYAPPROX_HPP
