#pragma once

// Clebsch-Gordan coefficients (Condon-Shortley phase) and Wigner 6j symbols.
//
// Both are evaluated with Racah's closed-form sums in exact rational
// arithmetic. A coefficient is held as s * sqrt(r) with s, r rational and is
// rounded to double only once, at the very end.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ercf/half_int.hpp"

namespace ercf {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Exact value s * sqrt(r), r >= 0.
struct SqrtRational {
  Rational s{0};
  Rational r{0};

  bool is_zero() const { return s == 0 || r == 0; }

  double to_double() const {
    if (is_zero()) return 0.0;
    const Rational squared = s * s * r;
    const double magnitude = std::sqrt(static_cast<double>(squared));
    return s < 0 ? -magnitude : magnitude;
  }

  friend SqrtRational operator*(const SqrtRational& a, const SqrtRational& b) {
    return {a.s * b.s, a.r * b.r};
  }
};

namespace detail {

inline constexpr int kMaxFactorial = 256;

inline const std::vector<BigInt>& factorial_table() {
  static const std::vector<BigInt> table = [] {
    std::vector<BigInt> t(kMaxFactorial + 1);
    t[0] = 1;
    for (int n = 1; n <= kMaxFactorial; ++n) t[n] = t[n - 1] * n;
    return t;
  }();
  return table;
}

inline const BigInt& factorial(int n) {
  if (n < 0) throw std::logic_error("factorial of negative argument");
  if (n > kMaxFactorial) throw std::domain_error("angular momentum arguments too large for factorial table");
  return factorial_table()[static_cast<std::size_t>(n)];
}

inline void require_nonnegative(HalfInt j, const char* what) {
  if (j.twice() < 0) throw std::domain_error(std::string(what) + ": negative angular momentum " + j.str());
}

inline void require_projection(HalfInt j, HalfInt m, const char* what) {
  require_nonnegative(j, what);
  if (abs(m) > j || !same_parity(j, m)) {
    throw std::domain_error(std::string(what) + ": invalid projection m=" + m.str() + " for j=" + j.str());
  }
}

/// (a+b+c) integer and |a-b| <= c <= a+b.
inline bool triad_ok(HalfInt a, HalfInt b, HalfInt c) {
  if ((a.twice() + b.twice() + c.twice()) % 2 != 0) return false;
  return c >= abs(a - b) && c <= a + b;
}

/// Triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!, arguments in twice-units.
inline Rational triangle_delta(int ta, int tb, int tc) {
  const BigInt num = factorial((ta + tb - tc) / 2) * factorial((ta - tb + tc) / 2) * factorial((-ta + tb + tc) / 2);
  return Rational(num, factorial((ta + tb + tc) / 2 + 1));
}

}  // namespace detail

/// Exact Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>.
inline SqrtRational cg_exact(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  detail::require_projection(j1, m1, "cg");
  detail::require_projection(j2, m2, "cg");
  detail::require_projection(J, M, "cg");
  if (m1 + m2 != M || !detail::triad_ok(j1, j2, J)) return {};

  // Everything below is an integer once halved.
  const int a = j1.twice(), b = j2.twice(), c = J.twice();
  const int ma = m1.twice(), mb = m2.twice(), mc = M.twice();

  const int k_min = std::max({0, (b - c - ma) / 2, (a - c + mb) / 2});
  const int k_max = std::min({(a + b - c) / 2, (a - ma) / 2, (b + mb) / 2});

  Rational sum = 0;
  for (int k = k_min; k <= k_max; ++k) {
    const BigInt den = detail::factorial(k) * detail::factorial((a + b - c) / 2 - k) *
                       detail::factorial((a - ma) / 2 - k) * detail::factorial((b + mb) / 2 - k) *
                       detail::factorial((c - b + ma) / 2 + k) * detail::factorial((c - a - mb) / 2 + k);
    sum += Rational(k % 2 == 0 ? 1 : -1, den);
  }

  Rational radicand = Rational(c + 1) * detail::triangle_delta(a, b, c);
  radicand *= Rational(detail::factorial((c + mc) / 2) * detail::factorial((c - mc) / 2) *
                       detail::factorial((a - ma) / 2) * detail::factorial((a + ma) / 2) *
                       detail::factorial((b - mb) / 2) * detail::factorial((b + mb) / 2));
  return {sum, radicand};
}

inline double cg(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  return cg_exact(j1, m1, j2, m2, J, M).to_double();
}

/// Exact Wigner 6j symbol {j1 j2 j3; j4 j5 j6}.
inline SqrtRational wigner6j_exact(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6) {
  for (HalfInt j : {j1, j2, j3, j4, j5, j6}) detail::require_nonnegative(j, "wigner6j");
  if (!detail::triad_ok(j1, j2, j3) || !detail::triad_ok(j1, j5, j6) || !detail::triad_ok(j4, j2, j6) ||
      !detail::triad_ok(j4, j5, j3)) {
    return {};
  }

  const int a = j1.twice(), b = j2.twice(), c = j3.twice();
  const int d = j4.twice(), e = j5.twice(), f = j6.twice();

  const std::array<int, 4> alpha{(a + b + c) / 2, (a + e + f) / 2, (d + b + f) / 2, (d + e + c) / 2};
  const std::array<int, 3> beta{(a + b + d + e) / 2, (b + c + e + f) / 2, (c + a + f + d) / 2};
  const int t_min = *std::max_element(alpha.begin(), alpha.end());
  const int t_max = *std::min_element(beta.begin(), beta.end());

  Rational sum = 0;
  for (int t = t_min; t <= t_max; ++t) {
    BigInt den = 1;
    for (int x : alpha) den *= detail::factorial(t - x);
    for (int y : beta) den *= detail::factorial(y - t);
    sum += Rational(t % 2 == 0 ? detail::factorial(t + 1) : BigInt(-detail::factorial(t + 1)), den);
  }

  const Rational radicand = detail::triangle_delta(a, b, c) * detail::triangle_delta(a, e, f) *
                            detail::triangle_delta(d, b, f) * detail::triangle_delta(d, e, c);
  return {sum, radicand};
}

inline double wigner6j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6) {
  return wigner6j_exact(j1, j2, j3, j4, j5, j6).to_double();
}

}  // namespace ercf
