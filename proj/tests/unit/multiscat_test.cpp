#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "oracles.hpp"
#include "proxyscat/errors.hpp"
#include "proxyscat/layered.hpp"
#include "proxyscat/multiscat.hpp"

using namespace proxyscat;

namespace {

std::vector<InclusionSpec> three_inclusions(double base_height = 0.0) {
  std::vector<InclusionSpec> out;
  const Vec2 centers[] = {{0.0, base_height}, {2.2, base_height + 0.3}, {0.9, base_height + 1.8}};
  for (const Vec2 c : centers) {
    InclusionSpec s;
    s.shape = star_ellipse(0.5, 0.3, c);
    s.n_gamma = 192;
    s.proxy = proxy_with_points(s.shape, 0.2, 192, 16);
    out.push_back(s);
  }
  return out;
}

std::vector<Vec2> probe_ring(Vec2 c, double r, int n) {
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * (i + 0.5) / n;
    pts.push_back({c.x1 + r * std::cos(t), c.x2 + r * std::sin(t)});
  }
  return pts;
}

std::shared_ptr<const LayeredMedium> medium_for(const std::vector<InclusionSpec>& specs, double kp,
                                                double km) {
  SommerfeldParams p;
  p.k_plus = kp;
  p.k_minus = km;
  p.delta = 1e300;
  p.height = 0.0;
  double lo = 1e300, hi = -1e300;
  for (const auto& s : specs) {
    p.delta = std::min(p.delta, s.proxy.center.x2 - 0.5 * s.proxy.height);
    p.height = std::max(p.height, s.proxy.center.x2 + 0.5 * s.proxy.height);
    lo = std::min(lo, s.proxy.center.x1 - 0.5 * s.proxy.width);
    hi = std::max(hi, s.proxy.center.x1 + 0.5 * s.proxy.width);
  }
  p.extent = 0.5 * (hi - lo) + 1.0;
  p.height += 1.0;
  p.tol = 1e-12;
  return std::make_shared<LayeredMedium>(kp, km, build_sommerfeld_rule(p));
}

CVector random_state(Eigen::Index n, unsigned long long seed) {
  oracle::Lcg rng(seed);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return v;
}

void check_transfer_modes_agree(const MultiSystem& sys) {
  std::vector<DiscretizedCurve> proxies;
  for (const auto& inc : sys.inclusions) proxies.push_back(inc.proxy);
  const TransferOperator free_op(proxies, sys.ctx, TransferOperator::Mode::matrix_free);
  const TransferOperator dense_op(proxies, sys.ctx, TransferOperator::Mode::dense_cached);
  const auto& off = free_op.offsets();
  const CVector x = random_state(off.back(), 9);
  const CVector a = free_op.apply(x);
  const CVector b = dense_op.apply(x);
  CHECK((a - b).norm() / a.norm() < 1e-12);
  CVector c = CVector::Zero(off.back());
  for (std::size_t i = 0; i + 1 < off.size(); ++i)
    for (std::size_t j = 0; j + 1 < off.size(); ++j)
      c.segment(off[i], off[i + 1] - off[i]) +=
          free_op.block(i, j) * x.segment(off[j], off[j + 1] - off[j]);
  CHECK((a - c).norm() / a.norm() < 1e-12);
  CHECK(free_op.block(1, 1).norm() == 0.0);
}

}  // namespace

TEST_SUITE("multiscat") {
  TEST_CASE("incident fields: gradients and validation") {
    const double h = 1e-6;
    const IncidentField fields[] = {IncidentField::plane(3.0, 0.7),
                                    IncidentField::point_source(2.0, {0.4, -3.0}),
                                    layered_incident(1.0, 2.0, 3.0)};
    for (const auto& f : fields) {
      for (Vec2 x : {Vec2{0.3, 0.8}, Vec2{-1.2, 2.0}}) {
        const auto g = f.gradient(x);
        CHECK(std::abs(g[0] - (f.value(x + Vec2{h, 0}) - f.value(x - Vec2{h, 0})) / (2 * h)) < 1e-7);
        CHECK(std::abs(g[1] - (f.value(x + Vec2{0, h}) - f.value(x - Vec2{0, h})) / (2 * h)) < 1e-7);
      }
    }
    CHECK(std::abs(fields[0].value({1.0, 2.0}) -
                   std::exp(cplx(0, 3.0 * (std::cos(0.7) + 2.0 * std::sin(0.7))))) < 1e-14);
    CHECK_THROWS_AS(IncidentField::plane(0.0), ConfigError);
    CHECK_THROWS_AS(IncidentField::point_source(-1.0, {}), ConfigError);
  }

  TEST_CASE("boundary state scaling round trip") {
    const auto specs = three_inclusions();
    std::vector<DiscretizedCurve> proxies;
    for (const auto& s : specs) proxies.push_back(discretize_proxy(s.proxy));
    const BoundaryState raw = incident_data(IncidentField::plane(2.0, 0.3), proxies);
    CHECK(raw.blocks() == 3);
    CHECK(raw.block_size(0) == 2 * 192);
    CHECK_FALSE(raw.scaled);
    const BoundaryState s = scale(raw, proxies);
    CHECK(s.scaled);
    CHECK((unscale(s, proxies).data - raw.data).norm() < 1e-14 * raw.data.norm());
  }

  TEST_CASE("free-space transfer: matrix-free, dense and assembled blocks agree") {
    ScatteringMatrixCache cache;
    const MultiSystem sys = make_system(three_inclusions(), KernelContext::free_space(4.0),
                                        IncidentField::plane(4.0, 0.2), cache);
    check_transfer_modes_agree(sys);
    CHECK(cache.builds() == 1);
  }

  TEST_CASE("layered transfer: matrix-free, dense and assembled blocks agree") {
    const auto specs = three_inclusions(1.2);
    const KernelContext ctx = KernelContext::layered_medium(medium_for(specs, 3.0, 5.0));
    ScatteringMatrixCache cache;
    const MultiSystem sys = make_system(specs, ctx, layered_incident(1.0, 3.0, 5.0), cache);
    check_transfer_modes_agree(sys);
  }

  TEST_CASE("proxy solve matches the monolithic boundary solve") {
    const double k = 4.0;
    const auto specs = three_inclusions();
    const KernelContext ctx = KernelContext::free_space(k);
    const IncidentField inc = IncidentField::plane(k, 0.2);
    ScatteringMatrixCache cache;
    const MultiSystem sys = make_system(specs, ctx, inc, cache);
    const MultiSolution sol = solve(sys, {1e-12, 200, 0});
    CHECK(sol.report.residual < 1e-11);
    CHECK(residual_check(sol, sys) == doctest::Approx(sol.report.residual).epsilon(1e-3).scale(1e-12));
    CHECK((apply_system(sys, sol.x.data) - apply_a(sys, sys.b.data)).norm() /
              apply_a(sys, sys.b.data).norm() < 1e-11);

    std::vector<DiscretizedCurve> curves;
    std::vector<CVector> data;
    for (const auto& i : sys.inclusions) {
      curves.push_back(i.gamma);
      CVector v(i.gamma.size());
      for (std::size_t j = 0; j < i.gamma.size(); ++j) v(j) = inc.value(i.gamma.nodes[j]);
      data.push_back(v);
    }
    const MonolithicSolution mono = solve_monolithic(curves, ctx, data);
    const auto probes = probe_ring({1.0, 0.8}, 3.8, 16);
    const FieldSample ref = eval_monolithic(curves, mono, probes, {}, ctx);
    const FieldSample got = eval_representation(sol, sys, probes);
    CHECK((got.u - ref.u).cwiseAbs().maxCoeff() / ref.u.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(dirichlet_residual(sol, sys) < 1e-9);
  }

  TEST_CASE("layered proxy solve matches the layered monolithic solve") {
    const double kp = 3.0, km = 5.0;
    const auto specs = three_inclusions(1.2);
    const KernelContext ctx = KernelContext::layered_medium(medium_for(specs, kp, km));
    const IncidentField inc = layered_incident(1.0, kp, km);
    ScatteringMatrixCache cache;
    const MultiSystem sys = make_system(specs, ctx, inc, cache);
    const MultiSolution sol = solve(sys, {1e-12, 200, 0});
    std::vector<DiscretizedCurve> curves;
    std::vector<CVector> data;
    for (const auto& i : sys.inclusions) {
      curves.push_back(i.gamma);
      CVector v(i.gamma.size());
      for (std::size_t j = 0; j < i.gamma.size(); ++j) v(j) = inc.value(i.gamma.nodes[j]);
      data.push_back(v);
    }
    const MonolithicSolution mono = solve_monolithic(curves, ctx, data);
    const std::vector<Vec2> probes = {{-2.0, 2.0}, {4.0, 1.5}, {0.8, 5.0}, {0.5, -0.8}, {-1.5, -2.0}};
    const FieldSample ref = eval_monolithic(curves, mono, probes, {}, ctx);
    const FieldSample got = eval_representation(sol, sys, probes);
    CHECK((got.u - ref.u).cwiseAbs().maxCoeff() / ref.u.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(dirichlet_residual(sol, sys) < 1e-8);
  }

  TEST_CASE("masking and field evaluation") {
    const double k = 2.0;
    ScatteringMatrixCache cache;
    const MultiSystem sys = make_system(three_inclusions(), KernelContext::free_space(k),
                                        IncidentField::plane(k), cache);
    const MultiSolution sol = solve(sys, {1e-10, 200, 0});
    const std::vector<Vec2> pts = {{0.0, 0.0}, {0.65, 0.0}, {0.0, 0.49}, {4.0, 4.0}};
    const FieldGrid g = eval_field(sol, sys, pts);
    CHECK(g.mask[0] == static_cast<int>(Mask::inside_scatterer));
    CHECK(g.mask[1] == static_cast<int>(Mask::inside_proxy));
    CHECK(g.mask[3] == static_cast<int>(Mask::exterior));
    CHECK(g.u_tot(0) == cplx(0.0));
    CHECK(g.u_sc(1) == cplx(0.0));
    const FieldSample rep = eval_representation(sol, sys, {pts[3]});
    CHECK(std::abs(g.u_sc(3) - rep.u(0)) < 1e-14);
    CHECK(std::abs(g.u_tot(3) - rep.u(0) - sys.incident.value(pts[3])) < 1e-14);
  }

  TEST_CASE("representation vanishes inside every proxy") {
    const double k = 3.0;
    ScatteringMatrixCache cache;
    const MultiSystem sys = make_system(three_inclusions(), KernelContext::free_space(k),
                                        IncidentField::plane(k, 1.0), cache);
    const MultiSolution sol = solve(sys, {1e-12, 200, 0});
    std::vector<Vec2> pts;
    for (const auto& inc : sys.inclusions)
      for (Vec2 d : {Vec2{0.6, 0.0}, Vec2{-0.6, 0.1}, Vec2{0.0, 0.42}, Vec2{0.1, -0.42}}) {
        const Vec2 p = inc.spec.shape.center + d;
        REQUIRE_FALSE(inc.spec.shape.contains(p));
        REQUIRE(inc.spec.proxy.contains(p));
        pts.push_back(p);
      }
    const FieldSample rep = eval_representation(sol, sys, pts);
    CHECK(rep.u.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(individual_scattered(sol, sys).size() == 3);
  }

  TEST_CASE("invalid layouts are rejected") {
    auto specs = three_inclusions();
    specs[1].shape.center = {0.3, 0.0};
    specs[1].proxy.center = {0.3, 0.0};
    ScatteringMatrixCache cache;
    CHECK_THROWS_AS(make_system(specs, KernelContext::free_space(1.0), IncidentField::plane(1.0), cache),
                    GeometryError);
    const auto low = three_inclusions(0.2);
    const auto ok = three_inclusions(1.2);
    const KernelContext ctx = KernelContext::layered_medium(medium_for(ok, 2.0, 3.0));
    CHECK_THROWS_AS(make_system(low, ctx, layered_incident(1.0, 2.0, 3.0), cache), ConfigError);
  }
}
