#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>

#include "proxyscat/layered.hpp"

using namespace proxyscat;

namespace {

std::shared_ptr<const LayeredMedium> make_medium(double kp, double km, double delta, double extent,
                                                 double height, double tol = 1e-12) {
  SommerfeldParams p;
  p.k_plus = kp;
  p.k_minus = km;
  p.delta = delta;
  p.extent = extent;
  p.height = height;
  p.tol = tol;
  return std::make_shared<LayeredMedium>(kp, km, build_sommerfeld_rule(p));
}

// Five-point Laplacian, Richardson-extrapolated in h.
cplx laplacian_plus_k2(const std::function<cplx(Vec2)>& f, Vec2 x, double k, double h) {
  const auto lap = [&](double s) {
    return (f(x + Vec2{s, 0}) + f(x - Vec2{s, 0}) + f(x + Vec2{0, s}) + f(x - Vec2{0, s}) -
            4.0 * f(x)) / (s * s);
  };
  return (4.0 * lap(0.5 * h) - lap(h)) / 3.0 + k * k * f(x);
}

}  // namespace

TEST_SUITE("layered") {
  TEST_CASE("outgoing branch of gamma") {
    const double k = 3.0;
    CHECK(gamma_branch(5.0, k) == cplx(4.0, 0.0));
    CHECK(gamma_branch(-5.0, k) == cplx(4.0, 0.0));
    const cplx g = gamma_branch(0.0, k);
    CHECK(g.real() == 0.0);
    CHECK(g.imag() == doctest::Approx(-3.0));
    for (double off : {-1e-14, -1e-3, 0.2, 1e-15}) {
      const cplx a = gamma_branch(k, off, k);
      const cplx b = gamma_branch(k + off, k);
      CHECK(std::abs(a - b) <= 1e-6 * std::abs(a) + 1e-7);
      const cplx c = std::sqrt(cplx(off * (off + 2 * k), 0.0));
      CHECK(std::abs(a - (off > 0 ? c : std::conj(c))) <= 1e-15 * (1.0 + std::abs(c)));
    }
  }

  TEST_CASE("truncation law and rule layout") {
    CHECK(truncation_law(2.0, 0.5, 1e-6) == doctest::Approx(2.0 + std::log(1e6) / 0.5));
    SommerfeldParams p;
    p.k_plus = 2.0;
    p.k_minus = 5.0;
    p.delta = 0.5;
    p.extent = 3.0;
    p.height = 2.0;
    p.tol = 1e-8;
    const SommerfeldRule r = build_sommerfeld_rule(p);
    CHECK(r.xi_max == doctest::Approx(std::max(truncation_law(2.0, 0.5, 1e-8), 1.25 * 5.0)));
    const std::size_t n = r.size();
    REQUIRE(n % 2 == 0);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r.nodes[i] == doctest::Approx(-r.nodes[n - 1 - i]));
      CHECK(r.weights[i] == doctest::Approx(r.weights[n - 1 - i]));
      CHECK(r.weights[i] > 0.0);
      CHECK(std::abs(r.nodes[i]) < r.xi_max);
      CHECK(r.nodes[i] == doctest::Approx(r.anchors[i] + r.offsets[i]).epsilon(1e-15));
      if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
    }
    double total = 0.0, gauss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += r.weights[i];
      gauss += r.weights[i] * std::exp(-r.nodes[i] * r.nodes[i]);
    }
    CHECK(total == doctest::Approx(2.0 * r.xi_max).epsilon(1e-13));
    CHECK(gauss == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
  }

  TEST_CASE("equal wavenumbers reduce to free space") {
    const auto m = make_medium(4.0, 4.0, 0.5, 3.0, 3.0);
    const Vec2 y{0.3, 1.2};
    for (Vec2 x : {Vec2{1.0, 0.4}, Vec2{-2.0, 2.5}}) {
      const KernelEval sp = s_plus(x, y, *m);
      CHECK(std::abs(sp.value) < 1e-14);
    }
    for (Vec2 x : {Vec2{1.0, -0.4}, Vec2{-2.5, -1.0}, Vec2{0.2, -0.05}}) {
      const KernelEval sm = s_minus(x, y, *m);
      CHECK(std::abs(sm.value - gk(4.0, x, y)) < 1e-10);
      const auto g = gk_grad_x(4.0, x, y);
      CHECK(std::abs(sm.grad_x[0] - g[0]) < 1e-9);
      CHECK(std::abs(sm.grad_x[1] - g[1]) < 1e-9);
    }
  }

  TEST_CASE("Sommerfeld parts satisfy the layer Helmholtz equations") {
    const double kp = 3.0, km = 6.0;
    const auto m = make_medium(kp, km, 0.5, 3.0, 3.0);
    const Vec2 y{0.2, 1.0};
    const double h = 2e-3;
    const auto sp = [&](Vec2 x) { return s_plus(x, y, *m).value; };
    const auto sm = [&](Vec2 x) { return s_minus(x, y, *m).value; };
    CHECK(std::abs(laplacian_plus_k2(sp, {1.0, 0.8}, kp, h)) < 1e-5);
    CHECK(std::abs(laplacian_plus_k2(sm, {-0.7, -0.6}, km, h)) < 1e-5);
  }

  TEST_CASE("interface continuity of value and normal derivative") {
    const auto m = make_medium(2.0, 5.0, 0.5, 3.0, 3.0);
    const Vec2 y{0.4, 0.9};
    for (double x1 : {-2.5, -0.3, 0.4, 1.7}) {
      const KernelEval up = layered_green({x1, 0.0}, y, *m);
      const KernelEval dn = s_minus({x1, 0.0}, y, *m);
      CHECK(std::abs(up.value - dn.value) < 1e-9);
      CHECK(std::abs(up.grad_x[1] - dn.grad_x[1]) < 1e-8);
    }
  }

  TEST_CASE("reciprocity in the upper layer") {
    const auto m = make_medium(2.0, 4.5, 0.5, 3.0, 3.0);
    const Vec2 x{-1.0, 2.0}, y{0.6, 0.8};
    const KernelEval a = s_plus(x, y, *m), b = s_plus(y, x, *m);
    CHECK(std::abs(a.value - b.value) < 1e-13);
    CHECK(std::abs(a.grad_x[0] - b.grad_y[0]) < 1e-12);
    CHECK(std::abs(a.grad_x[1] - b.grad_y[1]) < 1e-12);
  }

  TEST_CASE("kernel gradients and mixed Hessian agree with finite differences") {
    const auto m = make_medium(3.0, 1.5, 0.5, 3.0, 3.0);
    const Vec2 y{0.3, 1.1};
    const double h = 1e-5;
    for (Vec2 x : {Vec2{1.0, 0.7}, Vec2{-0.5, -0.8}}) {
      const KernelEval e = layered_green(x, y, *m);
      const auto val = [&](Vec2 xx, Vec2 yy) { return layered_green(xx, yy, *m).value; };
      const Vec2 ex{h, 0}, ey{0, h};
      CHECK(std::abs(e.grad_x[0] - (val(x + ex, y) - val(x - ex, y)) / (2 * h)) < 1e-7);
      CHECK(std::abs(e.grad_x[1] - (val(x + ey, y) - val(x - ey, y)) / (2 * h)) < 1e-7);
      CHECK(std::abs(e.grad_y[0] - (val(x, y + ex) - val(x, y - ex)) / (2 * h)) < 1e-7);
      CHECK(std::abs(e.grad_y[1] - (val(x, y + ey) - val(x, y - ey)) / (2 * h)) < 1e-7);
      const auto gy1 = [&](Vec2 xx) { return layered_green(xx, y, *m).grad_y[1]; };
      CHECK(std::abs(e.hxy[0][1] - (gy1(x + ex) - gy1(x - ex)) / (2 * h)) < 1e-6);
      CHECK(std::abs(e.hxy[1][1] - (gy1(x + ey) - gy1(x - ey)) / (2 * h)) < 1e-6);
    }
  }

  TEST_CASE("layered Green representation on a proxy above the interface") {
    const double kp = 4.0, km = 7.0;
    const RectProxySpec p{{0.0, 1.5}, 2.0, 1.6, 6, 5, 16};
    const DiscretizedCurve c = discretize_proxy(p);
    const auto m = make_medium(kp, km, 0.7, 3.0, 3.0);
    const KernelContext ctx = KernelContext::layered_medium(m);
    const Vec2 z{0.3, 1.4};
    CVector u(c.size()), dudn(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const KernelEval e = layered_green(c.nodes[i], z, *m);
      u(i) = e.value;
      dudn(i) = e.grad_x[0] * c.normals[i].x1 + e.grad_x[1] * c.normals[i].x2;
    }
    const std::vector<Vec2> outside = {{2.0, 2.0}, {-1.8, 0.9}, {0.5, 3.0}, {1.0, -0.7}, {-2.0, -0.2}};
    const std::vector<Vec2> inside = {{0.0, 1.5}, {-0.6, 1.0}, {0.7, 2.0}};
    const LayerBlocks bo = layer_blocks(c, point_cloud(outside, {}), ctx, Layer::S | Layer::D);
    const LayerBlocks bi = layer_blocks(c, point_cloud(inside, {}), ctx, Layer::S | Layer::D);
    const CVector ro = bo.D * u - bo.S * dudn;
    const CVector ri = bi.D * u - bi.S * dudn;
    for (std::size_t i = 0; i < outside.size(); ++i) {
      CAPTURE(i);
      CHECK(std::abs(ro(i) - layered_green(outside[i], z, *m).value) < 1e-9);
    }
    CHECK(ri.cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("two-pass far evaluation matches direct correction blocks") {
    const auto m = make_medium(3.0, 5.0, 0.5, 3.0, 3.0);
    const RectProxySpec p{{0.0, 1.2}, 1.5, 1.2, 3, 2, 16};
    const DiscretizedCurve c = discretize_proxy(p);
    CVector mu(c.size()), rho(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      mu(i) = cplx(std::cos(1.0 * i), std::sin(0.3 * i));
      rho(i) = cplx(std::sin(0.7 * i), 0.2);
    }
    const std::vector<Vec2> targets = {{2.0, 1.0}, {-2.0, 2.5}, {0.5, -0.5}};
    const std::vector<Vec2> normals = {{1, 0}, {0, 1}, {0.6, -0.8}};
    LayerBlocks b;
    b.S = CMatrix::Zero(3, c.size());
    b.D = b.S;
    b.Sp = b.S;
    b.Dp = b.S;
    add_correction_blocks(b, c, point_cloud(targets, normals), *m, kAllLayers);
    const FieldSample f = sommerfeld_far_apply(c, mu, rho, targets, normals, *m);
    CHECK((f.u - (b.D * mu - b.S * rho)).norm() < 1e-12 * (1.0 + f.u.norm()));
    CHECK((f.dudn - (b.Dp * mu - b.Sp * rho)).norm() < 1e-12 * (1.0 + f.dudn.norm()));
  }

  TEST_CASE("layered incident field satisfies the transmission conditions") {
    const double kp = 2.0, km = 3.5;
    for (double theta : {std::numbers::pi / 3, 0.4, 1.2}) {
      const IncidentField f = layered_incident(theta, kp, km);
      const auto [r, t] = layered_incident_coefficients(theta, kp, km);
      CHECK(std::abs(1.0 + r - t) < 1e-14);
      const double eps = 1e-9;
      for (double x1 : {-1.0, 0.3}) {
        CHECK(std::abs(f.value({x1, eps}) - f.value({x1, -eps})) < 1e-8);
        CHECK(std::abs(f.gradient({x1, eps})[1] - f.gradient({x1, -eps})[1]) < 1e-7);
      }
      const double h = 1e-3;
      const auto v = [&](Vec2 x) { return f.value(x); };
      CHECK(std::abs(laplacian_plus_k2(v, {0.2, 0.9}, kp, h)) < 1e-4);
      CHECK(std::abs(laplacian_plus_k2(v, {0.2, -0.9}, km, h)) < 1e-4);
    }
  }

  TEST_CASE("total internal reflection gives an evanescent transmitted wave") {
    const IncidentField f = layered_incident(0.2, 5.0, 2.0);
    CHECK(std::abs(f.value({0.0, -3.0})) < std::abs(f.value({0.0, -0.5})));
    const auto [r, t] = layered_incident_coefficients(0.2, 5.0, 2.0);
    CHECK(std::abs(r) == doctest::Approx(1.0).epsilon(1e-13));
  }
}
