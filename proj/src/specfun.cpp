#include "proxyscat/specfun.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace proxyscat::specfun {

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;
constexpr long double kEulerL = 0.577215664901532860606512090082402431L;

void check_order(int n) {
  if (n < 0) throw std::domain_error("cylinder function: negative order " + std::to_string(n));
}

int miller_start(int nmax, double x) {
  const double base = std::max(static_cast<double>(nmax), x);
  int start = static_cast<int>(base + 14.0 * std::cbrt(std::max(x, 1.0)) + 30.0);
  if (start % 2) ++start;
  return start;
}

// J_0..J_start(x) by backward recurrence normalized with J0 + 2 sum J_2k = 1.
std::vector<long double> miller_sequence(int nmax, long double x) {
  const int start = miller_start(nmax, static_cast<double>(x));
  std::vector<long double> j(start + 1, 0.0L);
  long double next = 0.0L;
  long double cur = 1e-40L;
  j[start] = cur;
  long double sum = 2.0L * cur;
  for (int m = start; m > 0; --m) {
    const long double prev = (2.0L * m / x) * cur - next;
    next = cur;
    cur = prev;
    j[m - 1] = cur;
    if ((m - 1) % 2 == 0) sum += (m == 1) ? cur : 2.0L * cur;
    if (std::fabs(cur) > 1e4000L) {
      for (int i = m - 1; i <= start; ++i) j[i] *= 1e-4000L;
      sum *= 1e-4000L;
      next *= 1e-4000L;
      cur *= 1e-4000L;
    }
  }
  const long double norm = 1.0L / sum;
  for (auto& v : j) v *= norm;
  return j;
}

struct Regular01 {
  long double j0, j1, f0, f1;
};

// J0, J1 and the log-free parts F0, F1 from the Neumann series.
Regular01 regular01(long double x) {
  const auto j = miller_sequence(2, x);
  const int top = static_cast<int>(j.size()) - 1;
  long double s0 = 0.0L;
  for (int k = 1; 2 * k <= top; ++k) s0 += ((k % 2) ? -1.0L : 1.0L) * j[2 * k] / k;
  long double s1 = 0.0L;
  for (int k = 1; 2 * k + 1 <= top; ++k)
    s1 += ((k % 2) ? -1.0L : 1.0L) * (j[2 * k - 1] - j[2 * k + 1]) / k;

  long double one_minus_j0_over_x;
  if (x < 1.0L) {
    // sum_{m>=1} (-1)^{m+1} (x/2)^{2m} / (m!)^2 / x
    const long double q = x * x / 4.0L;
    long double term = 1.0L;
    long double acc = 0.0L;
    for (int m = 1; m < 40; ++m) {
      term *= -q / (static_cast<long double>(m) * m);
      acc -= term;
      if (std::fabs(term) < 1e-24L * std::fabs(acc)) break;
    }
    one_minus_j0_over_x = acc / x;
  } else {
    one_minus_j0_over_x = (1.0L - j[0]) / x;
  }
  const long double two_pi = 2.0L / kPiL;
  Regular01 r;
  r.j0 = j[0];
  r.j1 = j[1];
  r.f0 = two_pi * kEulerL * j[0] - 2.0L * two_pi * s0;
  r.f1 = two_pi * kEulerL * j[1] + two_pi * one_minus_j0_over_x + two_pi * s1;
  return r;
}

}  // namespace

namespace detail {

Cylinder01 cylinder01_asymptotic(double x) {
  // Hankel expansion; a_k(nu) = prod_{m<=k} (4nu^2 - (2m-1)^2) / (8^k k!)
  static const auto coeffs = [] {
    std::array<std::array<double, 48>, 2> a{};
    for (int nu = 0; nu < 2; ++nu) {
      a[nu][0] = 1.0;
      for (int k = 1; k < 48; ++k) {
        const double odd = 2.0 * k - 1.0;
        a[nu][k] = a[nu][k - 1] * (4.0 * nu * nu - odd * odd) / (8.0 * k);
      }
    }
    return a;
  }();
  const double inv = 1.0 / x;
  double pq[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (int nu = 0; nu < 2; ++nu) {
    double xp = 1.0;
    double p = 0.0, q = 0.0;
    for (int k = 0; k < 48; ++k) {
      const double term = coeffs[nu][k] * xp;
      switch (k % 4) {
        case 0: p += term; break;
        case 1: q += term; break;
        case 2: p -= term; break;
        default: q -= term; break;
      }
      if (k > 2 && std::fabs(term) < 1e-18) break;
      xp *= inv;
    }
    pq[nu][0] = p;
    pq[nu][1] = q;
  }
  const double c = std::cos(x);
  const double s = std::sin(x);
  constexpr double r2 = 0.70710678118654752440;
  const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
  // chi0 = x - pi/4, chi1 = x - 3pi/4
  const double c0 = (c + s) * r2, s0 = (s - c) * r2;
  const double c1 = (s - c) * r2, s1 = -(s + c) * r2;
  Cylinder01 out;
  out.j0 = amp * (pq[0][0] * c0 - pq[0][1] * s0);
  out.y0 = amp * (pq[0][0] * s0 + pq[0][1] * c0);
  out.j1 = amp * (pq[1][0] * c1 - pq[1][1] * s1);
  out.y1 = amp * (pq[1][0] * s1 + pq[1][1] * c1);
  return out;
}

Cheb01Table build_cheb01_table() {
  Cheb01Table table{};
  constexpr int K = kChebTerms;
  for (int idx = 0; idx < kChebIntervals; ++idx) {
    const long double center = (idx + 0.5L) * kChebWidth;
    std::array<std::array<long double, K>, 4> samples{};
    for (int k = 0; k < K; ++k) {
      const long double u = std::cos(kPiL * (k + 0.5L) / K);
      const auto r = regular01(center + u * (kChebWidth / 2.0L));
      samples[0][k] = r.j0;
      samples[1][k] = r.j1;
      samples[2][k] = r.f0;
      samples[3][k] = r.f1;
    }
    for (int f = 0; f < 4; ++f) {
      for (int m = 0; m < K; ++m) {
        long double acc = 0.0L;
        for (int k = 0; k < K; ++k) acc += samples[f][k] * std::cos(kPiL * m * (k + 0.5L) / K);
        acc *= 2.0L / K;
        if (m == 0) acc *= 0.5L;
        table.coef[idx][f][m] = static_cast<double>(acc);
      }
    }
  }
  return table;
}

}  // namespace detail

Cylinder01 cylinder01_reference(double x) {
  if (!(x > 0.0)) throw std::domain_error("cylinder01_reference: argument must be positive");
  if (x >= detail::kChebLimit) return detail::cylinder01_asymptotic(x);
  const auto r = regular01(x);
  const long double lg = (2.0L / kPiL) * std::log(0.5L * x);
  return {static_cast<double>(r.j0), static_cast<double>(r.j1),
          static_cast<double>(r.f0 + lg * r.j0),
          static_cast<double>(r.f1 + lg * r.j1 - 2.0L / (kPiL * x))};
}

std::vector<double> bessel_j_seq(int order_max, double x) {
  check_order(order_max);
  if (x < 0.0 || std::isnan(x)) throw std::domain_error("bessel_j: negative argument");
  std::vector<double> out(order_max + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (x >= detail::kChebLimit && order_max <= x) {
    const auto c = detail::cylinder01_asymptotic(x);
    out[0] = c.j0;
    if (order_max >= 1) out[1] = c.j1;
    for (int n = 1; n < order_max; ++n) out[n + 1] = (2.0 * n / x) * out[n] - out[n - 1];
    return out;
  }
  const auto j = miller_sequence(order_max, x);
  for (int n = 0; n <= order_max; ++n) out[n] = static_cast<double>(j[n]);
  return out;
}

std::vector<double> bessel_y_seq(int order_max, double x) {
  check_order(order_max);
  if (!(x > 0.0)) throw std::domain_error("bessel_y: argument must be positive");
  const auto c = cylinder01(x);
  std::vector<double> out(order_max + 1, 0.0);
  out[0] = c.y0;
  if (order_max >= 1) out[1] = c.y1;
  for (int n = 1; n < order_max; ++n) out[n + 1] = (2.0 * n / x) * out[n] - out[n - 1];
  return out;
}

double bessel_j(int n, double x) {
  check_order(n);
  if (x < 0.0 || std::isnan(x)) throw std::domain_error("bessel_j: negative argument");
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n <= 1) {
    const auto c = cylinder01(x);
    return n == 0 ? c.j0 : c.j1;
  }
  return bessel_j_seq(n, x)[n];
}

double bessel_y(int n, double x) {
  check_order(n);
  if (!(x > 0.0)) throw std::domain_error("bessel_y: argument must be positive");
  if (n <= 1) {
    const auto c = cylinder01(x);
    return n == 0 ? c.y0 : c.y1;
  }
  return bessel_y_seq(n, x)[n];
}

std::complex<double> hankel1(int n, double x) {
  return {bessel_j(n, x), bessel_y(n, x)};
}

CylinderSeq hankel1_seq(int order_max, double x) {
  const auto j = bessel_j_seq(order_max, x);
  const auto y = bessel_y_seq(order_max, x);
  CylinderSeq seq;
  seq.order_max = order_max;
  seq.values.resize(order_max + 1);
  for (int n = 0; n <= order_max; ++n) seq.values[n] = {j[n], y[n]};
  return seq;
}

}  // namespace proxyscat::specfun
