#include "proxyscat/potentials.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "proxyscat/layered.hpp"
#include "proxyscat/specfun.hpp"

namespace proxyscat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEuler = 0.57721566490153286061;
const cplx kI{0.0, 1.0};

struct Hankel01 {
  cplx h0, h1;
};

inline Hankel01 hankel01(double kr) {
  const auto c = specfun::cylinder01(kr);
  return {{c.j0, c.y0}, {c.j1, c.y1}};
}

double separation(Vec2 x, Vec2 y) {
  const double r = norm(x - y);
  if (!(r > 0.0)) throw std::domain_error("Helmholtz kernel evaluated at coincident points");
  return r;
}

void check_curve(const DiscretizedCurve& c, bool need_normals, const char* who) {
  if (need_normals && c.normals.size() != c.nodes.size())
    throw std::invalid_argument(std::string(who) + ": normals required");
}

}  // namespace

KernelContext KernelContext::free_space(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("wavenumber must be positive");
  KernelContext ctx;
  ctx.k = k;
  return ctx;
}

KernelContext KernelContext::layered_medium(std::shared_ptr<const LayeredMedium> medium) {
  KernelContext ctx;
  ctx.k = medium->k_plus();
  ctx.layered = std::move(medium);
  return ctx;
}

cplx gk(double k, Vec2 x, Vec2 y) {
  const double r = separation(x, y);
  return 0.25 * kI * hankel01(k * r).h0;
}

std::array<cplx, 2> gk_grad_y(double k, Vec2 x, Vec2 y) {
  const double r = separation(x, y);
  const cplx f = 0.25 * kI * k * hankel01(k * r).h1 / r;
  return {f * (x.x1 - y.x1), f * (x.x2 - y.x2)};
}

std::array<cplx, 2> gk_grad_x(double k, Vec2 x, Vec2 y) {
  const auto g = gk_grad_y(k, x, y);
  return {-g[0], -g[1]};
}

cplx gk_cross(double k, Vec2 x, Vec2 y, Vec2 nx, Vec2 ny) {
  const double r = separation(x, y);
  const Vec2 rh = (1.0 / r) * (x - y);
  const auto h = hankel01(k * r);
  const double a = dot(nx, rh), b = dot(ny, rh);
  return 0.25 * kI * k * (k * h.h0 * a * b + h.h1 / r * (dot(nx, ny) - 2.0 * a * b));
}

DiscretizedCurve point_cloud(const std::vector<Vec2>& points, const std::vector<Vec2>& normals) {
  if (!normals.empty() && normals.size() != points.size())
    throw std::invalid_argument("point_cloud: normals/points size mismatch");
  DiscretizedCurve c;
  c.nodes = points;
  c.normals = normals;
  c.weights.assign(points.size(), 0.0);
  c.closed = false;
  return c;
}

LayerBlocks free_layer_blocks(const DiscretizedCurve& src, const DiscretizedCurve& tgt, double k,
                              unsigned mask, bool zero_below_interface) {
  const bool need_src_n = has(mask, Layer::D) || has(mask, Layer::Dp);
  const bool need_tgt_n = has(mask, Layer::Sp) || has(mask, Layer::Dp);
  check_curve(src, need_src_n, "layer_blocks(source)");
  check_curve(tgt, need_tgt_n, "layer_blocks(target)");
  const Eigen::Index nt = tgt.size(), ns = src.size();
  LayerBlocks out;
  if (has(mask, Layer::S)) out.S.resize(nt, ns);
  if (has(mask, Layer::D)) out.D.resize(nt, ns);
  if (has(mask, Layer::Sp)) out.Sp.resize(nt, ns);
  if (has(mask, Layer::Dp)) out.Dp.resize(nt, ns);
  const cplx ik4 = 0.25 * kI * k;
  const cplx i4 = 0.25 * kI;
  bool coincident = false;

#pragma omp parallel for schedule(static) reduction(|| : coincident)
  for (Eigen::Index j = 0; j < ns; ++j) {
    const Vec2 y = src.nodes[j];
    const double w = src.weights[j];
    const Vec2 ny = need_src_n ? src.normals[j] : Vec2{};
    for (Eigen::Index i = 0; i < nt; ++i) {
      const Vec2 x = tgt.nodes[i];
      if (zero_below_interface && x.x2 < 0.0) {
        if (has(mask, Layer::S)) out.S(i, j) = 0.0;
        if (has(mask, Layer::D)) out.D(i, j) = 0.0;
        if (has(mask, Layer::Sp)) out.Sp(i, j) = 0.0;
        if (has(mask, Layer::Dp)) out.Dp(i, j) = 0.0;
        continue;
      }
      const double d1 = x.x1 - y.x1, d2 = x.x2 - y.x2;
      const double r = std::sqrt(d1 * d1 + d2 * d2);
      if (!(r > 0.0)) {
        coincident = true;
        continue;
      }
      const auto h = hankel01(k * r);
      const double inv_r = 1.0 / r;
      if (has(mask, Layer::S)) out.S(i, j) = w * i4 * h.h0;
      const cplx f = ik4 * h.h1 * inv_r;
      const double ndy = need_src_n ? ny.x1 * d1 + ny.x2 * d2 : 0.0;
      if (has(mask, Layer::D)) out.D(i, j) = w * f * ndy;
      if (need_tgt_n) {
        const Vec2 nx = tgt.normals[i];
        const double ndx = nx.x1 * d1 + nx.x2 * d2;
        if (has(mask, Layer::Sp)) out.Sp(i, j) = -w * f * ndx;
        if (has(mask, Layer::Dp)) {
          const double a = ndx * inv_r, b = ndy * inv_r;
          out.Dp(i, j) =
              w * ik4 * (k * h.h0 * a * b + h.h1 * inv_r * (dot(nx, ny) - 2.0 * a * b));
        }
      }
    }
  }
  if (coincident)
    throw std::invalid_argument("layer_blocks: source and target share a node; use self_operators");
  return out;
}

LayerBlocks layer_blocks(const DiscretizedCurve& src, const DiscretizedCurve& tgt,
                         const KernelContext& ctx, unsigned mask) {
  LayerBlocks out = free_layer_blocks(src, tgt, ctx.k, mask, ctx.is_layered());
  if (ctx.is_layered()) add_correction_blocks(out, src, tgt, *ctx.layered, mask);
  return out;
}

CMatrix layer_matrix(Layer kind, const DiscretizedCurve& src, const DiscretizedCurve& tgt,
                     const KernelContext& ctx) {
  LayerBlocks b = layer_blocks(src, tgt, ctx, static_cast<unsigned>(kind));
  switch (kind) {
    case Layer::S: return std::move(b.S);
    case Layer::D: return std::move(b.D);
    case Layer::Sp: return std::move(b.Sp);
    case Layer::Dp: return std::move(b.Dp);
  }
  throw std::invalid_argument("layer_matrix: unknown kind");
}

std::vector<double> log_quadrature_weights(int n_nodes) {
  if (n_nodes < 2 || n_nodes % 2 != 0)
    throw std::invalid_argument("log quadrature needs an even node count");
  const int n = n_nodes / 2;
  std::vector<double> r(n_nodes);
  for (int d = 0; d < n_nodes; ++d) {
    double s = 0.0;
    for (int m = 1; m < n; ++m) s += std::cos(m * d * kPi / n) / m;
    r[d] = -2.0 * kPi / n * s - kPi / (static_cast<double>(n) * n) * ((d % 2) ? -1.0 : 1.0);
  }
  return r;
}

SelfOperators self_operators(const DiscretizedCurve& curve, const KernelContext& ctx) {
  const int nn = static_cast<int>(curve.size());
  if (nn % 2 != 0) throw std::invalid_argument("self_operators: node count must be even");
  if (curve.d1.size() != curve.size() || curve.d2.size() != curve.size())
    throw std::invalid_argument("self_operators: curve lacks parametrization derivatives");
  const int n = nn / 2;
  const double k = ctx.k;
  const auto rw = log_quadrature_weights(nn);
  const double h = kPi / n;
  SelfOperators out;
  out.S.resize(nn, nn);
  out.D.resize(nn, nn);
  const double inv4pi = 1.0 / (4.0 * kPi);

#pragma omp parallel for schedule(static)
  for (int j = 0; j < nn; ++j) {
    const Vec2 y = curve.nodes[j];
    const Vec2 dy = curve.d1[j];
    const double speed = norm(dy);
    const Vec2 nu{dy.x2, -dy.x1};
    for (int i = 0; i < nn; ++i) {
      const double rweight = rw[std::abs(i - j)];
      if (i == j) {
        const Vec2 ddy = curve.d2[j];
        const cplx m2 = (0.25 * kI - kEuler / (2.0 * kPi) -
                         std::log(0.5 * k * speed) / (2.0 * kPi)) * speed;
        const double m1 = -inv4pi * speed;
        out.S(i, j) = rweight * m1 + h * m2;
        const double l2 = inv4pi * (dy.x2 * ddy.x1 - dy.x1 * ddy.x2) / (speed * speed);
        out.D(i, j) = h * l2;
        continue;
      }
      const Vec2 x = curve.nodes[i];
      const double d1 = x.x1 - y.x1, d2 = x.x2 - y.x2;
      const double r = std::sqrt(d1 * d1 + d2 * d2);
      const auto c = specfun::cylinder01(k * r);
      const double sn = std::sin(0.5 * (curve.params[i] - curve.params[j]));
      const double lg = std::log(4.0 * sn * sn);
      const cplx m = 0.25 * kI * cplx(c.j0, c.y0) * speed;
      const double m1 = -inv4pi * c.j0 * speed;
      out.S(i, j) = rweight * m1 + h * (m - m1 * lg);
      const double nd = nu.x1 * d1 + nu.x2 * d2;
      const cplx l = 0.25 * kI * k * nd * cplx(c.j1, c.y1) / r;
      const double l1 = -k * inv4pi * nd * c.j1 / r;
      out.D(i, j) = rweight * l1 + h * (l - l1 * lg);
    }
  }
  if (ctx.is_layered()) {
    LayerBlocks corr;
    corr.S = CMatrix::Zero(nn, nn);
    corr.D = CMatrix::Zero(nn, nn);
    add_correction_blocks(corr, curve, curve, *ctx.layered, Layer::S | Layer::D);
    out.S += corr.S;
    out.D += corr.D;
  }
  return out;
}

CMatrix self_operator(Layer kind, const DiscretizedCurve& curve, const KernelContext& ctx) {
  if (kind != Layer::S && kind != Layer::D)
    throw std::invalid_argument("self_operator: only S and D are available on the curve");
  SelfOperators ops = self_operators(curve, ctx);
  return kind == Layer::S ? std::move(ops.S) : std::move(ops.D);
}

CMatrix combined_field_matrix(const DiscretizedCurve& curve, const KernelContext& ctx) {
  SelfOperators ops = self_operators(curve, ctx);
  CMatrix m = ops.D + (kI * ctx.k) * ops.S;
  m.diagonal().array() += 0.5;
  return m;
}

CVector solve_combined_field(const DiscretizedCurve& curve, const KernelContext& ctx,
                             const CVector& u_in) {
  if (u_in.size() != static_cast<Eigen::Index>(curve.size()))
    throw std::invalid_argument("solve_combined_field: data size does not match the curve");
  LuFactor lu(combined_field_matrix(curve, ctx));
  return -lu.solve(u_in);
}

FieldSample eval_scattered(const DiscretizedCurve& curve, const CVector& sigma,
                           const std::vector<Vec2>& targets, const std::vector<Vec2>& normals,
                           const KernelContext& ctx) {
  if (sigma.size() != static_cast<Eigen::Index>(curve.size()))
    throw std::invalid_argument("eval_scattered: density size does not match the curve");
  const bool with_n = !normals.empty();
  FieldSample out;
  out.u.resize(targets.size());
  if (with_n) out.dudn.resize(targets.size());
  const std::size_t chunk = 512;
  const cplx ik = kI * ctx.k;
  unsigned mask = Layer::S | Layer::D;
  if (with_n) mask = mask | Layer::Sp | Layer::Dp;
  for (std::size_t start = 0; start < targets.size(); start += chunk) {
    const std::size_t len = std::min(chunk, targets.size() - start);
    std::vector<Vec2> pts(targets.begin() + start, targets.begin() + start + len);
    std::vector<Vec2> nrm;
    if (with_n) nrm.assign(normals.begin() + start, normals.begin() + start + len);
    LayerBlocks b;
    try {
      b = free_layer_blocks(curve, point_cloud(pts, nrm), ctx.k, mask, ctx.is_layered());
    } catch (const std::invalid_argument&) {
      throw std::domain_error("eval_scattered: target lies on the curve");
    }
    out.u.segment(start, len) = b.D * sigma + ik * (b.S * sigma);
    if (with_n) out.dudn.segment(start, len) = b.Dp * sigma + ik * (b.Sp * sigma);
  }
  if (ctx.is_layered()) {
    // D[sigma] + ik S[sigma] = D[mu] - S[rho] with mu = sigma, rho = -ik sigma
    const FieldSample corr =
        sommerfeld_far_apply(curve, sigma, CVector(-ik * sigma), targets, normals, *ctx.layered);
    out.u += corr.u;
    if (with_n) out.dudn += corr.dudn;
  }
  return out;
}

MonolithicSolution solve_monolithic(const std::vector<DiscretizedCurve>& curves,
                                    const KernelContext& ctx,
                                    const std::vector<CVector>& u_in) {
  if (curves.size() != u_in.size())
    throw std::invalid_argument("solve_monolithic: one data vector per curve required");
  std::vector<Eigen::Index> off(curves.size() + 1, 0);
  for (std::size_t i = 0; i < curves.size(); ++i) off[i + 1] = off[i] + curves[i].size();
  const Eigen::Index n = off.back();
  CMatrix m(n, n);
  CVector rhs(n);
  const cplx ik = kI * ctx.k;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    rhs.segment(off[i], curves[i].size()) = u_in[i];
    for (std::size_t j = 0; j < curves.size(); ++j) {
      if (i == j) {
        m.block(off[i], off[i], curves[i].size(), curves[i].size()) =
            combined_field_matrix(curves[i], ctx);
      } else {
        LayerBlocks b = layer_blocks(curves[j], curves[i], ctx, Layer::S | Layer::D);
        m.block(off[i], off[j], curves[i].size(), curves[j].size()) = b.D + ik * b.S;
      }
    }
  }
  LuFactor lu(m);
  const CVector sigma = -lu.solve(rhs);
  MonolithicSolution sol;
  for (std::size_t i = 0; i < curves.size(); ++i)
    sol.sigma.push_back(sigma.segment(off[i], curves[i].size()));
  return sol;
}

FieldSample eval_monolithic(const std::vector<DiscretizedCurve>& curves,
                            const MonolithicSolution& sol, const std::vector<Vec2>& targets,
                            const std::vector<Vec2>& normals, const KernelContext& ctx) {
  FieldSample total;
  total.u = CVector::Zero(targets.size());
  if (!normals.empty()) total.dudn = CVector::Zero(targets.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const FieldSample f = eval_scattered(curves[i], sol.sigma[i], targets, normals, ctx);
    total.u += f.u;
    if (!normals.empty()) total.dudn += f.dudn;
  }
  return total;
}

}  // namespace proxyscat
