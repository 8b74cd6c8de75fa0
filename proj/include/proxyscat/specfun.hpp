#pragma once

// Integer-order cylinder functions of real argument.
//
// Two evaluation paths are provided.  The general-order routines
// (bessel_j, bessel_y, hankel1, *_seq) use Miller's backward recurrence for
// J_n and upward recurrence for Y_n.  The order 0/1 pair that the Helmholtz
// kernels need is served by cylinder01(), which uses piecewise Chebyshev
// tables on [0, 25) and the Hankel asymptotic expansion beyond.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace proxyscat::specfun {

/// Values C_n(x) for n = 0..order_max.
struct CylinderSeq {
  int order_max = 0;
  std::vector<std::complex<double>> values;
};

double bessel_j(int n, double x);
double bessel_y(int n, double x);
std::complex<double> hankel1(int n, double x);

std::vector<double> bessel_j_seq(int order_max, double x);
std::vector<double> bessel_y_seq(int order_max, double x);
CylinderSeq hankel1_seq(int order_max, double x);

/// J0, J1, Y0, Y1 at one argument.
struct Cylinder01 {
  double j0, j1, y0, y1;
};

/// Reference evaluation of the order 0/1 functions in extended precision
/// (backward recurrence + Neumann series).  Slow; used to build the tables
/// and by tests.
Cylinder01 cylinder01_reference(double x);

namespace detail {

inline constexpr int kChebIntervals = 50;
inline constexpr double kChebWidth = 0.5;
inline constexpr double kChebLimit = kChebIntervals * kChebWidth;
inline constexpr int kChebTerms = 14;

// Per interval: Chebyshev coefficients of J0, J1 and the log-free parts
//   F0 = Y0 - (2/pi) ln(x/2) J0,   F1 = Y1 - (2/pi) ln(x/2) J1 + 2/(pi x).
struct Cheb01Table {
  std::array<std::array<std::array<double, kChebTerms>, 4>, kChebIntervals> coef;
};

Cheb01Table build_cheb01_table();

inline const Cheb01Table& cheb01_table() {
  static const Cheb01Table table = build_cheb01_table();
  return table;
}

Cylinder01 cylinder01_asymptotic(double x);

}  // namespace detail

/// Fast J0, J1, Y0, Y1 for x > 0.
inline Cylinder01 cylinder01(double x) {
  if (x >= detail::kChebLimit) return detail::cylinder01_asymptotic(x);
  const auto& table = detail::cheb01_table();
  const int idx = static_cast<int>(x * (1.0 / detail::kChebWidth));
  const double u = (x - (idx + 0.5) * detail::kChebWidth) * (2.0 / detail::kChebWidth);
  std::array<double, detail::kChebTerms> t;
  t[0] = 1.0;
  t[1] = u;
  const double u2 = 2.0 * u;
  for (int m = 2; m < detail::kChebTerms; ++m) t[m] = u2 * t[m - 1] - t[m - 2];
  const auto& c = table.coef[idx];
  double v[4] = {0.0, 0.0, 0.0, 0.0};
  for (int f = 0; f < 4; ++f) {
    double s = 0.0;
    for (int m = 0; m < detail::kChebTerms; ++m) s += c[f][m] * t[m];
    v[f] = s;
  }
  constexpr double two_over_pi = 2.0 / std::numbers::pi;
  const double lg = two_over_pi * std::log(0.5 * x);
  return {v[0], v[1], v[2] + lg * v[0], v[3] + lg * v[1] - two_over_pi / x};
}

inline std::complex<double> hankel1_0(const Cylinder01& c) { return {c.j0, c.y0}; }
inline std::complex<double> hankel1_1(const Cylinder01& c) { return {c.j1, c.y1}; }

}  // namespace proxyscat::specfun
