// Unevaluated sum of two doubles (~106 bit mantissa).
//
// Used on the exact-moment path: closed-form moments, Gram assembly and the
// Cholesky factorization of the reference-basis Gram matrix. Only the
// operations that path needs are provided.

#pragma once

#include <cmath>

namespace optsample {

struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  constexpr DoubleDouble() = default;
  constexpr DoubleDouble(double h) : hi(h), lo(0.0) {}  // NOLINT(implicit)
  constexpr DoubleDouble(double h, double l) : hi(h), lo(l) {}

  [[nodiscard]] constexpr double to_double() const { return hi + lo; }
};

namespace dd_detail {

inline DoubleDouble two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline DoubleDouble quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DoubleDouble two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

}  // namespace dd_detail

inline DoubleDouble operator+(DoubleDouble a, DoubleDouble b) {
  DoubleDouble s = dd_detail::two_sum(a.hi, b.hi);
  DoubleDouble t = dd_detail::two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = dd_detail::quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return dd_detail::quick_two_sum(s.hi, s.lo);
}

inline DoubleDouble operator-(DoubleDouble a) { return {-a.hi, -a.lo}; }
inline DoubleDouble operator-(DoubleDouble a, DoubleDouble b) { return a + (-b); }

inline DoubleDouble operator*(DoubleDouble a, DoubleDouble b) {
  DoubleDouble p = dd_detail::two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return dd_detail::quick_two_sum(p.hi, p.lo);
}

inline DoubleDouble operator/(DoubleDouble a, DoubleDouble b) {
  // Long division: q1 + q2 + q3 with a correction step.
  const double q1 = a.hi / b.hi;
  DoubleDouble r = a - b * DoubleDouble(q1);
  const double q2 = r.hi / b.hi;
  r = r - b * DoubleDouble(q2);
  const double q3 = r.hi / b.hi;
  DoubleDouble q = dd_detail::quick_two_sum(q1, q2);
  return q + DoubleDouble(q3);
}

inline DoubleDouble& operator+=(DoubleDouble& a, DoubleDouble b) { return a = a + b; }
inline DoubleDouble& operator-=(DoubleDouble& a, DoubleDouble b) { return a = a - b; }
inline DoubleDouble& operator*=(DoubleDouble& a, DoubleDouble b) { return a = a * b; }
inline DoubleDouble& operator/=(DoubleDouble& a, DoubleDouble b) { return a = a / b; }

inline bool operator<(DoubleDouble a, DoubleDouble b) {
  return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}
inline bool operator>(DoubleDouble a, DoubleDouble b) { return b < a; }
inline bool operator<=(DoubleDouble a, DoubleDouble b) { return !(b < a); }

inline DoubleDouble abs(DoubleDouble a) { return a.hi < 0.0 ? -a : a; }

inline DoubleDouble sqrt(DoubleDouble a) {
  if (a.hi <= 0.0) return DoubleDouble(0.0);
  // One Newton step from the double approximation doubles the precision.
  const double x = 1.0 / std::sqrt(a.hi);
  const double ax = a.hi * x;
  const DoubleDouble diff = a - dd_detail::two_prod(ax, ax);
  return dd_detail::two_sum(ax, diff.hi * (x * 0.5));
}

inline DoubleDouble pow(DoubleDouble base, int exponent) {
  DoubleDouble result(1.0);
  DoubleDouble b = base;
  unsigned e = exponent < 0 ? static_cast<unsigned>(-exponent) : static_cast<unsigned>(exponent);
  while (e != 0U) {
    if ((e & 1U) != 0U) result *= b;
    b *= b;
    e >>= 1U;
  }
  return exponent < 0 ? DoubleDouble(1.0) / result : result;
}

// pi to double-double precision.
inline constexpr DoubleDouble kDdPi{3.141592653589793116e+00, 1.224646799147353207e-16};

}  // namespace optsample
