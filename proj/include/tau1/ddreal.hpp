#ifndef TAU1_DDREAL_HPP
#define TAU1_DDREAL_HPP

#include <cfloat>
#include <cmath>
#include <cstdint>

#include "tau1/numeric.hpp"

namespace tau1 {

/// Unevaluated sum of two long doubles (Dekker/Knuth error-free
/// transformations), roughly doubling the working mantissa. On x86-64 this
/// gives ~128 mantissa bits, enough to resolve best-approximation errors far
/// below the double precision floor.
struct DdReal {
  long double hi = 0.0L;
  long double lo = 0.0L;

  DdReal() = default;
  DdReal(long double h) : hi(h) {}
  DdReal(long double h, long double l) : hi(h), lo(l) {}
  DdReal(double d) : hi(d) {}
  DdReal(int i) : hi(i) {}

  double to_double() const { return static_cast<double>(hi + lo); }
  long double to_long_double() const { return hi + lo; }
};

namespace ddetail {

inline void quick_two_sum(long double a, long double b, long double& s, long double& e) {
  s = a + b;
  e = b - (s - a);
}

inline void two_sum(long double a, long double b, long double& s, long double& e) {
  s = a + b;
  const long double v = s - a;
  e = (a - (s - v)) + (b - v);
}

// Veltkamp split at ceil(mantissa/2) bits.
inline void split(long double a, long double& hi, long double& lo) {
  constexpr int shift = (LDBL_MANT_DIG + 1) / 2;
  constexpr long double splitter = (1LL << shift) + 1.0L;
  const long double t = splitter * a;
  hi = t - (t - a);
  lo = a - hi;
}

inline void two_prod(long double a, long double b, long double& p, long double& e) {
  p = a * b;
  long double a_hi, a_lo, b_hi, b_lo;
  split(a, a_hi, a_lo);
  split(b, b_hi, b_lo);
  e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo;
}

}  // namespace ddetail

inline DdReal operator+(const DdReal& a, const DdReal& b) {
  long double s1, s2, t1, t2;
  ddetail::two_sum(a.hi, b.hi, s1, s2);
  ddetail::two_sum(a.lo, b.lo, t1, t2);
  s2 += t1;
  ddetail::quick_two_sum(s1, s2, s1, s2);
  s2 += t2;
  ddetail::quick_two_sum(s1, s2, s1, s2);
  return {s1, s2};
}

inline DdReal operator-(const DdReal& a) { return {-a.hi, -a.lo}; }
inline DdReal operator-(const DdReal& a, const DdReal& b) { return a + (-b); }

inline DdReal operator*(const DdReal& a, const DdReal& b) {
  long double p, e;
  ddetail::two_prod(a.hi, b.hi, p, e);
  e += a.hi * b.lo + a.lo * b.hi;
  long double s1, s2;
  ddetail::quick_two_sum(p, e, s1, s2);
  return {s1, s2};
}

inline DdReal operator/(const DdReal& a, const DdReal& b) {
  long double q1 = a.hi / b.hi;
  DdReal r = a - DdReal(q1) * b;
  long double q2 = r.hi / b.hi;
  r = r - DdReal(q2) * b;
  const long double q3 = r.hi / b.hi;
  long double s1, s2;
  ddetail::quick_two_sum(q1, q2, s1, s2);
  DdReal q(s1, s2);
  return q + DdReal(q3);
}

inline DdReal& operator+=(DdReal& a, const DdReal& b) { return a = a + b; }
inline DdReal& operator-=(DdReal& a, const DdReal& b) { return a = a - b; }
inline DdReal& operator*=(DdReal& a, const DdReal& b) { return a = a * b; }
inline DdReal& operator/=(DdReal& a, const DdReal& b) { return a = a / b; }

inline bool operator<(const DdReal& a, const DdReal& b) {
  return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}
inline bool operator>(const DdReal& a, const DdReal& b) { return b < a; }
inline bool operator<=(const DdReal& a, const DdReal& b) { return !(b < a); }
inline bool operator>=(const DdReal& a, const DdReal& b) { return !(a < b); }
inline bool operator==(const DdReal& a, const DdReal& b) { return a.hi == b.hi && a.lo == b.lo; }

inline DdReal dd_abs(const DdReal& a) { return a.hi < 0.0L || (a.hi == 0.0L && a.lo < 0.0L) ? -a : a; }

inline DdReal dd_ldexp(const DdReal& a, int k) {
  return {std::ldexp(a.hi, k), std::ldexp(a.lo, k)};
}

/// ln 2 to full working precision via sum_k 1/(k 2^k); exact integer
/// denominators keep the series self-contained.
inline const DdReal& dd_ln2() {
  static const DdReal ln2 = [] {
    DdReal s(0.0L);
    for (int k = 160; k >= 1; --k) {
      const long double denom = static_cast<long double>(k) * std::ldexp(1.0L, k);
      s += DdReal(1.0L) / DdReal(denom);
    }
    return s;
  }();
  return ln2;
}

/// exp in extended precision: reduce by ln 2, scale the remainder down,
/// Taylor sum, square back up.
inline DdReal dd_exp(const DdReal& x) {
  if (x.hi > 11300.0L) throw DomainError("dd_exp: argument too large");
  if (x.hi < -11300.0L) return DdReal(0.0L);
  const long double m_ld = std::floor(x.hi / 0.693147180559945309L + 0.5L);
  const int m = static_cast<int>(m_ld);
  const DdReal r = x - dd_ln2() * DdReal(m_ld);
  constexpr int scale_pow = 9;
  const DdReal r_scaled = dd_ldexp(r, -scale_pow);

  DdReal term(1.0L);
  DdReal sum(1.0L);
  for (int k = 1; k <= 16; ++k) {
    term = term * r_scaled / DdReal(static_cast<long double>(k));
    sum += term;
  }
  for (int i = 0; i < scale_pow; ++i) sum = sum * sum;
  return dd_ldexp(sum, m);
}

}  // namespace tau1

#endif  // TAU1_DDREAL_HPP
