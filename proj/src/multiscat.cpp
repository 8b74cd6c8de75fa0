#include "proxyscat/multiscat.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "proxyscat/errors.hpp"
#include "proxyscat/layered.hpp"
#include "proxyscat/specfun.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace proxyscat {

namespace {

const cplx kI{0.0, 1.0};

std::vector<Eigen::Index> block_offsets(const std::vector<DiscretizedCurve>& proxies) {
  std::vector<Eigen::Index> off(proxies.size() + 1, 0);
  for (std::size_t i = 0; i < proxies.size(); ++i)
    off[i + 1] = off[i] + 2 * static_cast<Eigen::Index>(proxies[i].size());
  return off;
}

Eigen::VectorXd stacked_sqrt(const DiscretizedCurve& c) {
  const Eigen::Index n = c.size();
  Eigen::VectorXd s(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) s(j) = s(n + j) = std::sqrt(c.weights[j]);
  return s;
}

std::vector<DiscretizedCurve> proxies_of(const MultiSystem& sys) {
  std::vector<DiscretizedCurve> p;
  p.reserve(sys.inclusions.size());
  for (const auto& inc : sys.inclusions) p.push_back(inc.proxy);
  return p;
}

BoundaryState rescale(const BoundaryState& s, const std::vector<DiscretizedCurve>& proxies,
                      bool to_scaled) {
  if (s.blocks() != proxies.size()) throw std::invalid_argument("boundary state/proxy mismatch");
  BoundaryState out = s;
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    const Eigen::VectorXd w = stacked_sqrt(proxies[i]);
    if (w.size() != s.block_size(i)) throw std::invalid_argument("boundary block size mismatch");
    if (to_scaled)
      out.block(i) = (s.block(i).array() * w.array().cast<cplx>()).matrix();
    else
      out.block(i) = (s.block(i).array() / w.array().cast<cplx>()).matrix();
  }
  out.scaled = to_scaled;
  return out;
}

BoundaryState as_state(const std::vector<Eigen::Index>& offsets, CVector data, bool scaled) {
  BoundaryState s;
  s.offsets = offsets;
  s.data = std::move(data);
  s.scaled = scaled;
  return s;
}

DiscretizedCurve concatenate(const std::vector<DiscretizedCurve>& curves) {
  DiscretizedCurve all;
  for (const auto& c : curves) {
    all.nodes.insert(all.nodes.end(), c.nodes.begin(), c.nodes.end());
    all.normals.insert(all.normals.end(), c.normals.begin(), c.normals.end());
    all.weights.insert(all.weights.end(), c.weights.begin(), c.weights.end());
  }
  all.closed = false;
  return all;
}

}  // namespace

cplx IncidentField::value(Vec2 x) const {
  switch (kind) {
    case Kind::plane:
      return std::exp(kI * k * (std::cos(theta) * x.x1 + std::sin(theta) * x.x2));
    case Kind::point_source:
      return gk(k, x, source);
    case Kind::plane_layered: {
      const auto rt = layered_incident_coefficients(theta, k, k_minus);
      const double a = k * std::cos(theta), q = k * std::sin(theta);
      const cplx ph = std::exp(kI * a * x.x1);
      if (x.x2 >= 0.0)
        return ph * (std::exp(-kI * q * x.x2) + rt[0] * std::exp(kI * q * x.x2));
      const double d = k_minus * k_minus - a * a;
      const cplx p = d >= 0.0 ? cplx(std::sqrt(d), 0.0) : cplx(0.0, std::sqrt(-d));
      return rt[1] * ph * std::exp(-kI * p * x.x2);
    }
  }
  throw std::logic_error("unknown incident kind");
}

std::array<cplx, 2> IncidentField::gradient(Vec2 x) const {
  switch (kind) {
    case Kind::plane: {
      const double c = std::cos(theta), s = std::sin(theta);
      const cplx u = std::exp(kI * k * (c * x.x1 + s * x.x2));
      return {kI * k * c * u, kI * k * s * u};
    }
    case Kind::point_source:
      return gk_grad_x(k, x, source);
    case Kind::plane_layered: {
      const auto rt = layered_incident_coefficients(theta, k, k_minus);
      const double a = k * std::cos(theta), q = k * std::sin(theta);
      const cplx ph = std::exp(kI * a * x.x1);
      if (x.x2 >= 0.0) {
        const cplx down = std::exp(-kI * q * x.x2), up = rt[0] * std::exp(kI * q * x.x2);
        return {kI * a * ph * (down + up), kI * q * ph * (up - down)};
      }
      const double d = k_minus * k_minus - a * a;
      const cplx p = d >= 0.0 ? cplx(std::sqrt(d), 0.0) : cplx(0.0, std::sqrt(-d));
      const cplx u = rt[1] * ph * std::exp(-kI * p * x.x2);
      return {kI * a * u, -kI * p * u};
    }
  }
  throw std::logic_error("unknown incident kind");
}

IncidentField IncidentField::plane(double k, double theta) {
  if (!(k > 0.0)) throw ConfigError("wavenumber must be positive");
  IncidentField f;
  f.kind = Kind::plane;
  f.k = k;
  f.theta = theta;
  return f;
}

IncidentField IncidentField::point_source(double k, Vec2 src) {
  if (!(k > 0.0)) throw ConfigError("wavenumber must be positive");
  IncidentField f;
  f.kind = Kind::point_source;
  f.k = k;
  f.source = src;
  return f;
}

BoundaryState incident_data(const IncidentField& field, const std::vector<DiscretizedCurve>& proxies) {
  BoundaryState s;
  s.offsets = block_offsets(proxies);
  s.data.resize(s.offsets.back());
  s.scaled = false;
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    const auto& p = proxies[i];
    const Eigen::Index n = p.size();
    auto blk = s.block(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      blk(j) = field.value(p.nodes[j]);
      const auto g = field.gradient(p.nodes[j]);
      blk(n + j) = g[0] * p.normals[j].x1 + g[1] * p.normals[j].x2;
    }
  }
  return s;
}

BoundaryState scale(const BoundaryState& s, const std::vector<DiscretizedCurve>& proxies) {
  if (s.scaled) return s;
  return rescale(s, proxies, true);
}

BoundaryState unscale(const BoundaryState& s, const std::vector<DiscretizedCurve>& proxies) {
  if (!s.scaled) return s;
  return rescale(s, proxies, false);
}

TransferOperator::TransferOperator(std::vector<DiscretizedCurve> proxies, KernelContext ctx,
                                   Mode mode)
    : proxies_(std::move(proxies)), ctx_(std::move(ctx)), mode_(mode) {
  offsets_ = block_offsets(proxies_);
  for (const auto& p : proxies_) sqrt_w_.push_back(stacked_sqrt(p));
  if (ctx_.is_layered()) sommerfeld_ = std::make_unique<SommerfeldTransfer>(proxies_, ctx_.layered);
  if (mode_ == Mode::dense_cached) {
    const std::size_t m = proxies_.size();
    dense_.assign(m, std::vector<CMatrix>(m));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        const LayerBlocks b =
            free_layer_blocks(proxies_[j], proxies_[i], ctx_.k, kAllLayers, ctx_.is_layered());
        const Eigen::Index ni = proxies_[i].size(), nj = proxies_[j].size();
        CMatrix t(2 * ni, 2 * nj);
        t.topLeftCorner(ni, nj) = b.D;
        t.topRightCorner(ni, nj) = -b.S;
        t.bottomLeftCorner(ni, nj) = b.Dp;
        t.bottomRightCorner(ni, nj) = -b.Sp;
        dense_[i][j] = sqrt_w_[i].cast<cplx>().asDiagonal() * t *
                       sqrt_w_[j].cwiseInverse().cast<cplx>().asDiagonal();
      }
    }
  }
}

TransferOperator::~TransferOperator() = default;

CMatrix TransferOperator::block(std::size_t i, std::size_t j) const {
  const Eigen::Index ni = proxies_[i].size(), nj = proxies_[j].size();
  CMatrix t = CMatrix::Zero(2 * ni, 2 * nj);
  if (i == j) return t;
  const LayerBlocks b = layer_blocks(proxies_[j], proxies_[i], ctx_, kAllLayers);
  t.topLeftCorner(ni, nj) = b.D;
  t.topRightCorner(ni, nj) = -b.S;
  t.bottomLeftCorner(ni, nj) = b.Dp;
  t.bottomRightCorner(ni, nj) = -b.Sp;
  return sqrt_w_[i].cast<cplx>().asDiagonal() * t *
         sqrt_w_[j].cwiseInverse().cast<cplx>().asDiagonal();
}

void TransferOperator::apply_free(const std::vector<CVector>& in, std::vector<CVector>& out) const {
  const std::size_t m = proxies_.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  const double k = ctx_.k;
  const cplx ik4 = 0.25 * kI * k;
  const cplx i4 = 0.25 * kI;
  const bool zero_below = ctx_.is_layered();

  // Weighted densities.
  std::vector<CVector> wm(m), wr(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::Index n = proxies_[j].size();
    wm[j].resize(n);
    wr[j].resize(n);
    for (Eigen::Index b = 0; b < n; ++b) {
      wm[j](b) = proxies_[j].weights[b] * in[j](b);
      wr[j](b) = proxies_[j].weights[b] * in[j](n + b);
    }
  }

#pragma omp parallel
  {
    std::vector<CVector> local(m);
    for (std::size_t i = 0; i < m; ++i) local[i] = CVector::Zero(2 * proxies_[i].size());
#pragma omp for schedule(dynamic)
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      const auto& pi = proxies_[i];
      const auto& pj = proxies_[j];
      const Eigen::Index ni = pi.size(), nj = pj.size();
      CVector& oi = local[i];
      CVector& oj = local[j];
      for (Eigen::Index a = 0; a < ni; ++a) {
        const Vec2 x = pi.nodes[a];
        const Vec2 ma = pi.normals[a];
        const bool skip_i = zero_below && x.x2 < 0.0;
        cplx ui = 0.0, dui = 0.0;
        const cplx wma = wm[i](a), wra = wr[i](a);
        for (Eigen::Index b = 0; b < nj; ++b) {
          const Vec2 y = pj.nodes[b];
          const Vec2 nb = pj.normals[b];
          const double d1 = x.x1 - y.x1, d2 = x.x2 - y.x2;
          const double r = std::sqrt(d1 * d1 + d2 * d2);
          const auto c = specfun::cylinder01(k * r);
          const cplx h0{c.j0, c.y0}, h1{c.j1, c.y1};
          const double inv_r = 1.0 / r;
          const cplx f = ik4 * h1 * inv_r;
          const cplx g0 = i4 * h0;
          const double A = ma.x1 * d1 + ma.x2 * d2;
          const double B = nb.x1 * d1 + nb.x2 * d2;
          const double C = ma.x1 * nb.x1 + ma.x2 * nb.x2;
          const double ar = A * inv_r, br = B * inv_r;
          const cplx q = ik4 * (k * h0 * ar * br + h1 * inv_r * (C - 2.0 * ar * br));
          if (!skip_i) {
            ui += f * B * wm[j](b) - g0 * wr[j](b);
            dui += q * wm[j](b) + f * A * wr[j](b);
          }
          if (!(zero_below && y.x2 < 0.0)) {
            oj(b) += -f * A * wma - g0 * wra;
            oj(nj + b) += q * wma - f * B * wra;
          }
        }
        oi(a) += ui;
        oi(ni + a) += dui;
      }
    }
#pragma omp critical
    for (std::size_t i = 0; i < m; ++i) out[i] += local[i];
  }
}

CVector TransferOperator::apply(const CVector& x) const {
  const std::size_t m = proxies_.size();
  if (x.size() != offsets_.back()) throw std::invalid_argument("transfer apply: size mismatch");
  CVector y = CVector::Zero(x.size());
  if (m < 2) return y;
  std::vector<CVector> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = CVector::Zero(2 * proxies_[i].size());
  std::vector<CVector> in(m);
  for (std::size_t j = 0; j < m; ++j)
    in[j] = (x.segment(offsets_[j], offsets_[j + 1] - offsets_[j]).array() /
             sqrt_w_[j].array().cast<cplx>())
                .matrix();
  if (mode_ == Mode::dense_cached) {
    for (std::size_t i = 0; i < m; ++i) {
      auto yi = y.segment(offsets_[i], offsets_[i + 1] - offsets_[i]);
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        yi.noalias() += dense_[i][j] * x.segment(offsets_[j], offsets_[j + 1] - offsets_[j]);
      }
    }
  } else {
    apply_free(in, out);
  }
  if (sommerfeld_) sommerfeld_->apply_add(in, out);
  for (std::size_t i = 0; i < m; ++i)
    y.segment(offsets_[i], offsets_[i + 1] - offsets_[i]) +=
        (out[i].array() * sqrt_w_[i].array().cast<cplx>()).matrix();
  return y;
}

TransferOperator::Mode choose_transfer_mode(const std::vector<DiscretizedCurve>& proxies,
                                            const KernelContext&, double budget_bytes) {
  double total = 0.0;
  for (std::size_t i = 0; i < proxies.size(); ++i)
    for (std::size_t j = 0; j < proxies.size(); ++j)
      if (i != j) total += 4.0 * proxies[i].size() * proxies[j].size() * sizeof(cplx);
  if (proxies.size() <= 16 && total <= budget_bytes) return TransferOperator::Mode::dense_cached;
  return TransferOperator::Mode::matrix_free;
}

MultiSystem make_system(const std::vector<InclusionSpec>& specs, const KernelContext& ctx,
                        const IncidentField& incident, ScatteringMatrixCache& cache,
                        const SystemOptions& opt) {
  if (specs.empty()) throw ConfigError("no scatterers given");
  MultiSystem sys;
  sys.ctx = ctx;
  sys.incident = incident;
  std::vector<RectProxySpec> rects;
  for (const auto& s : specs) {
    s.shape.validate();
    s.proxy.validate();
    if (ctx.is_layered()) {
      const double lo = s.proxy.center.x2 - 0.5 * s.proxy.height;
      if (lo < ctx.layered->delta() * (1.0 - 1e-12))
        throw GeometryError("proxy rectangle reaches below the layered height bound");
    }
    rects.push_back(s.proxy);
  }
  check_proxies_disjoint(rects);
  for (const auto& s : specs) {
    Inclusion inc;
    inc.spec = s;
    inc.gamma = discretize_scatterer(s.shape, s.n_gamma);
    inc.proxy = discretize_proxy(s.proxy);
    inc.a = cache.get(s, ctx);
    if (inc.a->n_p != static_cast<int>(inc.proxy.size()))
      throw std::logic_error("scattering matrix does not match its proxy");
    sys.inclusions.push_back(std::move(inc));
  }
  auto proxies = proxies_of(sys);
  auto mode = opt.auto_mode ? choose_transfer_mode(proxies, ctx, opt.dense_budget_bytes) : opt.mode;
  sys.b = scale(incident_data(incident, proxies), proxies);
  sys.transfer = std::make_unique<TransferOperator>(std::move(proxies), ctx, mode);
  return sys;
}

CVector apply_a(const MultiSystem& sys, const CVector& x) {
  const auto& off = sys.transfer->offsets();
  CVector y(x.size());
  for (std::size_t i = 0; i < sys.inclusions.size(); ++i) {
    const Eigen::Index n = off[i + 1] - off[i];
    y.segment(off[i], n).noalias() = sys.inclusions[i].a->entries * x.segment(off[i], n);
  }
  return y;
}

CVector apply_system(const MultiSystem& sys, const CVector& v) {
  const CVector tv = sys.transfer->apply(v);
  return v - apply_a(sys, tv) - tv;
}

MultiSolution solve(const MultiSystem& sys, const SolveOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const CVector rhs = apply_a(sys, sys.b.data);
  GmresOptions g;
  g.tol = opt.tol;
  g.max_iter = opt.max_iter;
  g.restart = opt.restart;
  const GmresResult r = gmres([&](const CVector& v, CVector& w) { w = apply_system(sys, v); }, rhs,
                              g);
  MultiSolution sol;
  sol.x = as_state(sys.transfer->offsets(), r.x, true);
  sol.report.iterations = r.iterations;
  sol.report.history = r.history;
  sol.report.residual = residual_check(sol, sys);
  sol.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

double residual_check(const MultiSolution& sol, const MultiSystem& sys) {
  const CVector rhs = apply_a(sys, sys.b.data);
  const double nr = rhs.norm();
  const double res = (apply_system(sys, sol.x.data) - rhs).norm();
  return nr > 0.0 ? res / nr : res;
}

FieldSample eval_representation(const MultiSolution& sol, const MultiSystem& sys,
                                const std::vector<Vec2>& targets,
                                const std::vector<Vec2>& normals) {
  const auto proxies = proxies_of(sys);
  const BoundaryState x = unscale(sol.x, proxies);
  const DiscretizedCurve all = concatenate(proxies);
  const Eigen::Index n_all = all.size();
  CVector mu(n_all), rho(n_all);
  Eigen::Index pos = 0;
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    const Eigen::Index n = proxies[i].size();
    mu.segment(pos, n) = x.block(i).head(n);
    rho.segment(pos, n) = x.block(i).tail(n);
    pos += n;
  }
  const bool with_n = !normals.empty();
  if (with_n && normals.size() != targets.size())
    throw std::invalid_argument("eval_representation: normals/targets size mismatch");
  FieldSample out;
  out.u = CVector::Zero(targets.size());
  if (with_n) out.dudn = CVector::Zero(targets.size());
  const std::size_t chunk = 512;
  unsigned mask = Layer::S | Layer::D;
  if (with_n) mask = mask | Layer::Sp | Layer::Dp;
  for (std::size_t start = 0; start < targets.size(); start += chunk) {
    const std::size_t len = std::min(chunk, targets.size() - start);
    std::vector<Vec2> pts(targets.begin() + start, targets.begin() + start + len);
    std::vector<Vec2> nrm;
    if (with_n) nrm.assign(normals.begin() + start, normals.begin() + start + len);
    LayerBlocks b;
    try {
      b = free_layer_blocks(all, point_cloud(pts, nrm), sys.ctx.k, mask, sys.ctx.is_layered());
    } catch (const std::invalid_argument&) {
      throw std::domain_error("eval_representation: target coincides with a proxy node");
    }
    out.u.segment(start, len) = b.D * mu - b.S * rho;
    if (with_n) out.dudn.segment(start, len) = b.Dp * mu - b.Sp * rho;
  }
  if (sys.ctx.is_layered()) {
    const FieldSample c = sommerfeld_far_apply(all, mu, rho, targets, normals, *sys.ctx.layered);
    out.u += c.u;
    if (with_n) out.dudn += c.dudn;
  }
  return out;
}

int mask_of(const MultiSystem& sys, Vec2 p) {
  int m = static_cast<int>(Mask::exterior);
  for (const auto& inc : sys.inclusions) {
    if (inc.spec.shape.contains(p)) return static_cast<int>(Mask::inside_scatterer);
    if (inc.spec.proxy.contains(p)) m = static_cast<int>(Mask::inside_proxy);
  }
  return m;
}

FieldGrid eval_field(const MultiSolution& sol, const MultiSystem& sys,
                     const std::vector<Vec2>& targets) {
  FieldGrid g;
  g.points = targets;
  g.mask.resize(targets.size());
  g.u_sc = CVector::Zero(targets.size());
  g.u_tot = CVector::Zero(targets.size());
  std::vector<Vec2> outside;
  std::vector<std::size_t> index;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    g.mask[t] = mask_of(sys, targets[t]);
    if (g.mask[t] == static_cast<int>(Mask::exterior)) {
      outside.push_back(targets[t]);
      index.push_back(t);
    }
  }
  if (outside.empty()) return g;
  const FieldSample f = eval_representation(sol, sys, outside);
  for (std::size_t q = 0; q < outside.size(); ++q) {
    g.u_sc(index[q]) = f.u(q);
    g.u_tot(index[q]) = f.u(q) + sys.incident.value(outside[q]);
  }
  return g;
}

std::vector<CVector> individual_scattered(const MultiSolution& sol, const MultiSystem& sys) {
  const auto proxies = proxies_of(sys);
  const CVector tx = sys.transfer->apply(sol.x.data);
  const BoundaryState d =
      unscale(as_state(sys.transfer->offsets(), sol.x.data - tx, true), proxies);
  std::vector<CVector> out;
  for (std::size_t i = 0; i < d.blocks(); ++i) out.emplace_back(d.block(i));
  return out;
}

double dirichlet_residual(const MultiSolution& sol, const MultiSystem& sys) {
  const auto proxies = proxies_of(sys);
  const std::size_t m = sys.inclusions.size();
  const CVector tx = sys.transfer->apply(sol.x.data);
  const BoundaryState incoming =
      unscale(as_state(sys.transfer->offsets(), sys.b.data + tx, true), proxies);
  struct Factored {
    CMatrix m;
    std::unique_ptr<LuFactor> lu;
  };
  std::map<std::string, Factored> factored;
  std::vector<CVector> sigma(m), self_field(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& inc = sys.inclusions[i];
    const Eigen::Index np = inc.proxy.size();
    std::string key = inclusion_key(inc.spec, sys.ctx);
    auto it = factored.find(key);
    if (it == factored.end()) {
      Factored f;
      f.m = combined_field_matrix(inc.gamma, sys.ctx);
      f.lu = std::make_unique<LuFactor>(f.m);
      it = factored.emplace(key, std::move(f)).first;
    }
    const LayerBlocks b = layer_blocks(inc.proxy, inc.gamma, sys.ctx, Layer::S | Layer::D);
    const auto blk = incoming.block(i);
    const CVector u_on_gamma = -b.D * blk.head(np) + b.S * blk.tail(np);
    sigma[i] = -it->second.lu->solve(u_on_gamma);
    self_field[i] = it->second.m * sigma[i];
  }

  double worst = 0.0, scale_in = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& g = sys.inclusions[i].gamma;
    CVector total = self_field[i];
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      total += eval_scattered(sys.inclusions[j].gamma, sigma[j], g.nodes, {}, sys.ctx).u;
    }
    for (Eigen::Index t = 0; t < total.size(); ++t) {
      const cplx uin = sys.incident.value(g.nodes[t]);
      scale_in = std::max(scale_in, std::abs(uin));
      worst = std::max(worst, std::abs(total(t) + uin));
    }
  }
  return scale_in > 0.0 ? worst / scale_in : worst;
}

}  // namespace proxyscat
