#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "proxyscat/geom.hpp"
#include "proxyscat/specfun.hpp"

namespace oracle {

using cplx = std::complex<double>;

// Sound-soft disk of radius rho at the origin, plane wave e^{ik x1}:
// u_sc = -sum_n i^n J_n(k rho) / H_n(k rho) H_n(k r) e^{i n theta}.
inline cplx disk_scattered(double k, double rho, proxyscat::Vec2 x, int n_max = 0) {
  if (n_max <= 0) n_max = static_cast<int>(k * rho) + 40;
  const double r = std::hypot(x.x1, x.x2);
  const double th = std::atan2(x.x2, x.x1);
  const auto ja = proxyscat::specfun::bessel_j_seq(n_max, k * rho);
  const auto ya = proxyscat::specfun::bessel_y_seq(n_max, k * rho);
  const auto jr = proxyscat::specfun::bessel_j_seq(n_max, k * r);
  const auto yr = proxyscat::specfun::bessel_y_seq(n_max, k * r);
  cplx sum = 0.0;
  cplx in = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    const cplx ha{ja[n], ya[n]};
    const cplx hr{jr[n], yr[n]};
    const cplx term = in * ja[n] / ha * hr;
    sum += n == 0 ? term : term * 2.0 * std::cos(n * th);
    in *= cplx(0.0, 1.0);
  }
  return -sum;
}

// Deterministic points for property tests.
class Lcg {
 public:
  explicit Lcg(unsigned long long s) : s_(s) {}
  double uniform() {
    s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(s_ >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  unsigned long long s_;
};

}  // namespace oracle
