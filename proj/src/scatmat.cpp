#include "proxyscat/scatmat.hpp"

#include <cstdio>
#include <sstream>

#include "proxyscat/errors.hpp"
#include "proxyscat/io.hpp"
#include "proxyscat/layered.hpp"

namespace proxyscat {

namespace {

const cplx kI{0.0, 1.0};

std::string hexf(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void check_enclosed(const DiscretizedCurve& gamma, const DiscretizedCurve& proxy) {
  double lo1 = proxy.nodes[0].x1, hi1 = lo1, lo2 = proxy.nodes[0].x2, hi2 = lo2;
  for (const Vec2& p : proxy.nodes) {
    lo1 = std::min(lo1, p.x1);
    hi1 = std::max(hi1, p.x1);
    lo2 = std::min(lo2, p.x2);
    hi2 = std::max(hi2, p.x2);
  }
  for (const Vec2& p : gamma.nodes) {
    if (!(p.x1 > lo1 && p.x1 < hi1 && p.x2 > lo2 && p.x2 < hi2))
      throw GeometryError("scatterer is not strictly inside its proxy rectangle");
  }
}

Eigen::VectorXd stacked_sqrt_weights(const DiscretizedCurve& proxy) {
  const Eigen::Index n = proxy.size();
  Eigen::VectorXd s(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) s(j) = s(n + j) = std::sqrt(proxy.weights[j]);
  return s;
}

void finish(ScatteringMatrix& a, const DiscretizedCurve& proxy, const KernelContext& ctx,
            CMatrix unscaled) {
  a.n_p = static_cast<int>(proxy.size());
  a.sqrt_weights = stacked_sqrt_weights(proxy);
  a.entries = a.sqrt_weights.cast<cplx>().asDiagonal() * unscaled *
              a.sqrt_weights.cwiseInverse().cast<cplx>().asDiagonal();
  if (ctx.is_layered()) {
    a.medium = MediumTag::layered;
    a.k_plus = ctx.layered->k_plus();
    a.k_minus = ctx.layered->k_minus();
  } else {
    a.medium = MediumTag::free_space;
    a.k_plus = ctx.k;
  }
}

}  // namespace

std::string inclusion_key(const InclusionSpec& s, const KernelContext& ctx) {
  std::ostringstream k;
  k << (s.shape.kind == ShapeKind::ellipse ? "E" : "W") << ':' << hexf(s.shape.a) << ':'
    << hexf(s.shape.b);
  if (s.shape.kind == ShapeKind::star_ellipse)
    k << ':' << hexf(s.shape.star_amplitude) << ':' << s.shape.star_frequency;
  k << "|n=" << s.n_gamma;
  const Vec2 off = s.proxy.center - s.shape.center;
  k << "|P:" << hexf(s.proxy.width) << ':' << hexf(s.proxy.height) << ':'
    << s.proxy.panels_horizontal << ':' << s.proxy.panels_vertical << ':' << s.proxy.panel_order
    << ':' << hexf(off.x1) << ':' << hexf(off.x2);
  if (ctx.is_layered()) {
    const auto& p = ctx.layered->rule().params;
    k << "|L:" << hexf(ctx.layered->k_plus()) << ':' << hexf(ctx.layered->k_minus()) << ':'
      << hexf(p.delta) << ':' << hexf(p.extent) << ':' << hexf(p.height) << ':' << hexf(p.tol)
      << ':' << hexf(ctx.layered->rule().xi_max) << "|h=" << hexf(s.shape.center.x2);
  } else {
    k << "|F:" << hexf(ctx.k);
  }
  return k.str();
}

ScatteringMatrix build_scattering_matrix(const DiscretizedCurve& gamma,
                                         const DiscretizedCurve& proxy,
                                         const KernelContext& ctx) {
  check_enclosed(gamma, proxy);
  const Eigen::Index n = gamma.size(), np = proxy.size();
  const cplx ik = kI * ctx.k;

  const LayerBlocks in = layer_blocks(proxy, gamma, ctx, Layer::S | Layer::D);
  CMatrix right(n, 2 * np);
  right.leftCols(np) = in.D;
  right.rightCols(np) = -in.S;
  LuFactor lu(combined_field_matrix(gamma, ctx));
  const CMatrix mid = lu.solve(right);

  const LayerBlocks out = layer_blocks(gamma, proxy, ctx, kAllLayers);
  CMatrix left(2 * np, n);
  left.topRows(np) = out.D + ik * out.S;
  left.bottomRows(np) = out.Dp + ik * out.Sp;

  ScatteringMatrix a;
  finish(a, proxy, ctx, left * mid);
  return a;
}

ScatteringMatrix build_scattering_matrix_columnwise(const DiscretizedCurve& gamma,
                                                    const DiscretizedCurve& proxy,
                                                    const KernelContext& ctx) {
  check_enclosed(gamma, proxy);
  const Eigen::Index n = gamma.size(), np = proxy.size();
  LuFactor lu(combined_field_matrix(gamma, ctx));
  CMatrix unscaled(2 * np, 2 * np);
  for (Eigen::Index b = 0; b < 2 * np; ++b) {
    const bool dipole = b < np;
    const Eigen::Index node = dipole ? b : b - np;
    const Vec2 y = proxy.nodes[node];
    const Vec2 ny = proxy.normals[node];
    const double w = proxy.weights[node];
    CVector u_in(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 x = gamma.nodes[i];
      if (ctx.is_layered()) {
        const KernelEval g = layered_green(x, y, *ctx.layered);
        u_in(i) = dipole ? -w * (g.grad_y[0] * ny.x1 + g.grad_y[1] * ny.x2) : w * g.value;
      } else if (dipole) {
        const auto gy = gk_grad_y(ctx.k, x, y);
        u_in(i) = -w * (gy[0] * ny.x1 + gy[1] * ny.x2);
      } else {
        u_in(i) = w * gk(ctx.k, x, y);
      }
    }
    const CVector sigma = -lu.solve(u_in);
    const FieldSample f = eval_scattered(gamma, sigma, proxy.nodes, proxy.normals, ctx);
    unscaled.col(b).head(np) = f.u;
    unscaled.col(b).tail(np) = f.dudn;
  }
  ScatteringMatrix a;
  finish(a, proxy, ctx, std::move(unscaled));
  return a;
}

CVector apply(const ScatteringMatrix& a, const CVector& incoming) {
  if (incoming.size() != a.entries.cols())
    throw std::invalid_argument("scattering matrix apply: dimension mismatch");
  return a.entries * incoming;
}

CVector scale_state(const ScatteringMatrix& a, const CVector& v) {
  if (v.size() != a.sqrt_weights.size()) throw std::invalid_argument("scale_state: size mismatch");
  return (v.array() * a.sqrt_weights.array().cast<cplx>()).matrix();
}

CVector unscale_state(const ScatteringMatrix& a, const CVector& v) {
  if (v.size() != a.sqrt_weights.size()) throw std::invalid_argument("unscale_state: size mismatch");
  return (v.array() / a.sqrt_weights.array().cast<cplx>()).matrix();
}

void write_scattering_matrix(const std::filesystem::path& path, const ScatteringMatrix& a) {
  ByteWriter w;
  w.raw("PSCM", 4);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(a.n_p));
  w.u32(static_cast<std::uint32_t>(a.medium));
  w.f64(a.k_plus);
  if (a.medium == MediumTag::layered) w.f64(a.k_minus);
  for (Eigen::Index r = 0; r < a.entries.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.entries.cols(); ++c) {
      w.f64(a.entries(r, c).real());
      w.f64(a.entries(r, c).imag());
    }
  }
  write_file_atomic(path, w.str());
}

ScatteringMatrix read_scattering_matrix(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  ByteReader r(data);
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "PSCM") throw Error(path.string() + ": not a scattering-matrix file");
  const std::uint32_t version = r.u32();
  if (version != 1) throw Error(path.string() + ": unsupported version " + std::to_string(version));
  ScatteringMatrix a;
  a.n_p = static_cast<int>(r.u32());
  const std::uint32_t tag = r.u32();
  if (tag > 1) throw Error(path.string() + ": unknown medium tag");
  a.medium = static_cast<MediumTag>(tag);
  a.k_plus = r.f64();
  if (a.medium == MediumTag::layered) a.k_minus = r.f64();
  const Eigen::Index m = 2 * static_cast<Eigen::Index>(a.n_p);
  if (r.remaining() != static_cast<std::size_t>(m * m * 16))
    throw Error(path.string() + ": truncated or oversized matrix payload");
  a.entries.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index c = 0; c < m; ++c) {
      const double re = r.f64();
      const double im = r.f64();
      a.entries(i, c) = {re, im};
    }
  }
  return a;
}

std::shared_ptr<const ScatteringMatrix> translate_reuse(
    std::shared_ptr<const ScatteringMatrix> a, const InclusionSpec& shifted,
    const KernelContext& ctx) {
  if (!a) throw std::invalid_argument("translate_reuse: null matrix");
  if (inclusion_key(shifted, ctx) != a->key)
    throw GeometryError("translate_reuse: inclusion is not a rigid translate of the cached one");
  return a;
}

std::shared_ptr<const ScatteringMatrix> ScatteringMatrixCache::get(const InclusionSpec& spec,
                                                                   const KernelContext& ctx) {
  const std::string key = inclusion_key(spec, ctx);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++hits_;
      return translate_reuse(it->second, spec, ctx);
    }
  }
  const DiscretizedCurve gamma = discretize_scatterer(spec.shape, spec.n_gamma);
  const DiscretizedCurve proxy = discretize_proxy(spec.proxy);
  auto built = std::make_shared<ScatteringMatrix>(build_scattering_matrix(gamma, proxy, ctx));
  built->key = key;
  std::lock_guard<std::mutex> lock(mutex_);
  ++builds_;
  cache_.emplace(key, built);
  return built;
}

}  // namespace proxyscat
