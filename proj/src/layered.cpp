#include "proxyscat/layered.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "proxyscat/errors.hpp"

namespace proxyscat {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

// Panel anchor + dir * [lo, hi]; nodes keep their offsets from the anchor.
void add_panel(SommerfeldRule& rule, const QuadRule& gl, double anchor, double dir, double lo,
               double hi, bool sqrt_map) {
  const double a = anchor + dir * lo, b = anchor + dir * hi;
  rule.panels.push_back({std::min(a, b), std::max(a, b), sqrt_map});
  const double h = hi - lo;
  for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
    const double s = 0.5 * (gl.nodes[q] + 1.0);
    double off, w;
    if (sqrt_map) {
      // offset = lo + h s^2 with s in (0, 1)
      off = lo + h * s * s;
      w = h * s * gl.weights[q];
    } else {
      off = lo + h * s;
      w = 0.5 * h * gl.weights[q];
    }
    rule.nodes.push_back(anchor + dir * off);
    rule.weights.push_back(w);
    rule.anchors.push_back(anchor);
    rule.offsets.push_back(dir * off);
  }
}

void add_uniform(SommerfeldRule& rule, const QuadRule& gl, double anchor, double dir, double lo,
                 double hi, double max_len) {
  const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_len - 1e-12)));
  const double h = (hi - lo) / pieces;
  for (int p = 0; p < pieces; ++p) add_panel(rule, gl, anchor, dir, lo + p * h, lo + (p + 1) * h, false);
}

// Segment of length len leaving the branch point `anchor` in direction dir.
void add_graded(SommerfeldRule& rule, const QuadRule& gl, const QuadRule& glg, double anchor,
                double dir, double len, double min_width, double max_len) {
  int levels = 1;
  while (len / std::ldexp(1.0, levels) > min_width) ++levels;
  // innermost piece of width len / 2^levels, then dyadic pieces out to len / 2
  add_panel(rule, glg, anchor, dir, 0.0, len / std::ldexp(1.0, levels), true);
  for (int l = levels; l > 1; --l) {
    const double lo = len / std::ldexp(1.0, l), hi = len / std::ldexp(1.0, l - 1);
    if (hi - lo > max_len)
      add_uniform(rule, gl, anchor, dir, lo, hi, max_len);
    else
      add_panel(rule, glg, anchor, dir, lo, hi, false);
  }
  add_uniform(rule, gl, anchor, dir, 0.5 * len, len, max_len);
}

}  // namespace

double truncation_law(double k_plus, double delta, double tol) {
  return k_plus + std::log(1.0 / tol) / delta;
}

SommerfeldRule build_sommerfeld_rule(const SommerfeldParams& p) {
  if (!(p.k_plus > 0.0) || !(p.k_minus > 0.0))
    throw ConfigError("sommerfeld: wavenumbers must be positive");
  if (!(p.delta > 0.0) || !(p.extent > 0.0) || !(p.tol > 0.0) || !(p.tol < 1.0))
    throw ConfigError("sommerfeld: delta, extent and tol must be positive (tol < 1)");
  const double kmax = std::max(p.k_plus, p.k_minus);
  const double kmin = std::min(p.k_plus, p.k_minus);
  if (!(2.0 * kPi * p.delta * kmax > 0.1))
    throw ConfigError("sommerfeld: standoff too small, need 2 pi delta max(k+, k-) > 0.1 (got " +
                      std::to_string(2.0 * kPi * p.delta * kmax) + ")");
  if (p.panel_order < 4 || p.graded_order < 4) throw ConfigError("sommerfeld: panel order too small");

  SommerfeldRule rule;
  rule.params = p;
  const double law = truncation_law(p.k_plus, p.delta, p.tol);
  rule.xi_max = p.xi_max > 0.0 ? p.xi_max : std::max(law, 1.25 * kmax);
  if (!(rule.xi_max > 1.05 * kmax))
    throw ConfigError("sommerfeld: xi_max must exceed both wavenumbers");

  const double span = 2.0 * std::max(p.extent, std::max(p.height, p.delta));
  const double max_len = std::min(12.0 / span, std::max(0.5 * kmin, 0.5));
  const double min_width = p.tol * kmin;
  const QuadRule gl = gauss_legendre(p.panel_order);
  const QuadRule glg = gauss_legendre(p.graded_order);

  std::vector<double> branches{p.k_plus};
  if (std::fabs(p.k_minus - p.k_plus) > 1e-14 * kmax) branches.push_back(p.k_minus);
  std::sort(branches.begin(), branches.end());

  SommerfeldRule half;
  half.params = p;
  // Panels are emitted per segment; sort the half rule afterwards.
  add_graded(half, gl, glg, branches[0], -1.0, branches[0], min_width, max_len);
  if (branches.size() == 2) {
    const double mid = 0.5 * (branches[1] - branches[0]);
    add_graded(half, gl, glg, branches[0], 1.0, mid, min_width, max_len);
    add_graded(half, gl, glg, branches[1], -1.0, mid, min_width, max_len);
  }
  add_graded(half, gl, glg, branches.back(), 1.0, rule.xi_max - branches.back(), min_width,
             max_len);

  const std::size_t n = half.nodes.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return half.nodes[x] < half.nodes[y]; });
  rule.nodes.resize(2 * n);
  rule.weights.resize(2 * n);
  rule.anchors.resize(2 * n);
  rule.offsets.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = order[n - 1 - i], hi = order[i];
    rule.nodes[i] = -half.nodes[lo];
    rule.weights[i] = half.weights[lo];
    rule.anchors[i] = -half.anchors[lo];
    rule.offsets[i] = -half.offsets[lo];
    rule.nodes[n + i] = half.nodes[hi];
    rule.weights[n + i] = half.weights[hi];
    rule.anchors[n + i] = half.anchors[hi];
    rule.offsets[n + i] = half.offsets[hi];
  }
  std::sort(half.panels.begin(), half.panels.end(),
            [](const SommerfeldPanel& x, const SommerfeldPanel& y) { return x.a < y.a; });
  rule.panels = std::move(half.panels);
  return rule;
}

cplx gamma_branch(double xi, double k) {
  const double d = xi * xi - k * k;
  if (d >= 0.0) return {std::sqrt(d), 0.0};
  return {0.0, -std::sqrt(-d)};
}

cplx gamma_branch(double anchor, double offset, double k) {
  if (std::fabs(anchor) != k) return gamma_branch(anchor + offset, k);
  const double d = offset * (offset + 2.0 * anchor);
  if (d >= 0.0) return {std::sqrt(d), 0.0};
  return {0.0, -std::sqrt(-d)};
}

LayeredMedium::LayeredMedium(double k_plus, double k_minus, SommerfeldRule rule)
    : k_plus_(k_plus), k_minus_(k_minus), rule_(std::move(rule)) {
  if (!(k_plus > 0.0) || !(k_minus > 0.0))
    throw ConfigError("layered medium: wavenumbers must be positive");
  const std::size_t n = rule_.size();
  gp_.resize(n);
  gm_.resize(n);
  cp_.resize(n);
  cm_.resize(n);
  const double dk2 = k_minus * k_minus - k_plus * k_plus;
  for (std::size_t l = 0; l < n; ++l) {
    const double anchor = rule_.anchors[l], off = rule_.offsets[l];
    const cplx gp = gamma_branch(anchor, off, k_plus);
    const cplx gm = gamma_branch(anchor, off, k_minus);
    const cplx sum = gp + gm;
    gp_[l] = gp;
    gm_[l] = gm;
    cp_[l] = rule_.weights[l] / (4.0 * kPi) * dk2 / (gp * sum * sum);
    cm_[l] = rule_.weights[l] / (4.0 * kPi) * 2.0 / sum;
  }
}

namespace {

void check_source_height(double y2, const LayeredMedium& m) {
  if (y2 < m.delta() * (1.0 - 1e-12))
    throw GeometryError("layered kernel: source height " + std::to_string(y2) +
                        " below the Sommerfeld standoff " + std::to_string(m.delta()));
}

}  // namespace

KernelEval s_plus(Vec2 x, Vec2 y, const LayeredMedium& m) {
  check_source_height(y.x2, m);
  if (x.x2 < 0.0) throw GeometryError("s_plus: target below the interface");
  KernelEval out;
  const auto& xi = m.rule().nodes;
  const double dx1 = x.x1 - y.x1, h = x.x2 + y.x2;
  for (std::size_t l = 0; l < xi.size(); ++l) {
    const cplx g = m.gamma_plus()[l];
    const cplx t = m.coef_plus()[l] * std::exp(-g * h + kI * (xi[l] * dx1));
    const cplx fx[2] = {kI * xi[l], -g};
    const cplx fy[2] = {-kI * xi[l], -g};
    out.value += t;
    for (int a = 0; a < 2; ++a) {
      out.grad_x[a] += fx[a] * t;
      out.grad_y[a] += fy[a] * t;
      for (int b = 0; b < 2; ++b) out.hxy[a][b] += fx[a] * fy[b] * t;
    }
  }
  return out;
}

KernelEval s_minus(Vec2 x, Vec2 y, const LayeredMedium& m) {
  check_source_height(y.x2, m);
  if (x.x2 > 0.0) throw GeometryError("s_minus: target above the interface");
  KernelEval out;
  const auto& xi = m.rule().nodes;
  const double dx1 = x.x1 - y.x1;
  for (std::size_t l = 0; l < xi.size(); ++l) {
    const cplx gp = m.gamma_plus()[l];
    const cplx gm = m.gamma_minus()[l];
    const cplx t = m.coef_minus()[l] * std::exp(gm * x.x2 - gp * y.x2 + kI * (xi[l] * dx1));
    const cplx fx[2] = {kI * xi[l], gm};
    const cplx fy[2] = {-kI * xi[l], -gp};
    out.value += t;
    for (int a = 0; a < 2; ++a) {
      out.grad_x[a] += fx[a] * t;
      out.grad_y[a] += fy[a] * t;
      for (int b = 0; b < 2; ++b) out.hxy[a][b] += fx[a] * fy[b] * t;
    }
  }
  return out;
}

KernelEval layered_green(Vec2 x, Vec2 y, const LayeredMedium& m) {
  if (x.x2 < 0.0) return s_minus(x, y, m);
  KernelEval out = s_plus(x, y, m);
  const double k = m.k_plus();
  out.value += gk(k, x, y);
  const auto gx = gk_grad_x(k, x, y);
  const auto gy = gk_grad_y(k, x, y);
  const Vec2 e[2] = {{1.0, 0.0}, {0.0, 1.0}};
  for (int a = 0; a < 2; ++a) {
    out.grad_x[a] += gx[a];
    out.grad_y[a] += gy[a];
    for (int b = 0; b < 2; ++b) out.hxy[a][b] += gk_cross(k, x, y, e[a], e[b]);
  }
  return out;
}

namespace {

// Rows: nodes; columns: rule nodes.
//   source table  w_j e^{-g+ y2 - i xi y1}
//   target table  e^{-g+ x2 + i xi x1} (upper) or e^{g- x2 + i xi x1} (lower)
CMatrix source_table(const DiscretizedCurve& c, const LayeredMedium& m, bool with_weights) {
  const auto& xi = m.rule().nodes;
  const auto& gp = m.gamma_plus();
  CMatrix e(c.size(), xi.size());
  for (std::size_t j = 0; j < c.size(); ++j) check_source_height(c.nodes[j].x2, m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(xi.size()); ++l) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double w = with_weights ? c.weights[j] : 1.0;
      e(j, l) = w * std::exp(-gp[l] * c.nodes[j].x2 - kI * (xi[l] * c.nodes[j].x1));
    }
  }
  return e;
}

CMatrix target_table(const std::vector<Vec2>& pts, const LayeredMedium& m, bool upper) {
  const auto& xi = m.rule().nodes;
  const auto& g = upper ? m.gamma_plus() : m.gamma_minus();
  const double sgn = upper ? -1.0 : 1.0;
  CMatrix e(pts.size(), xi.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(xi.size()); ++l) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      e(i, l) = std::exp(sgn * g[l] * pts[i].x2 + kI * (xi[l] * pts[i].x1));
  }
  return e;
}

}  // namespace

void add_correction_blocks(LayerBlocks& blocks, const DiscretizedCurve& src,
                           const DiscretizedCurve& tgt, const LayeredMedium& m, unsigned mask) {
  const auto& xi = m.rule().nodes;
  const Eigen::Index nx = static_cast<Eigen::Index>(xi.size());
  const bool need_src_n = has(mask, Layer::D) || has(mask, Layer::Dp);
  const bool need_tgt_n = has(mask, Layer::Sp) || has(mask, Layer::Dp);

  const CMatrix es = source_table(src, m, true);
  CMatrix esf;
  if (need_src_n) {
    esf.resize(es.rows(), es.cols());
    for (Eigen::Index l = 0; l < nx; ++l) {
      const cplx a = -kI * xi[l], b = -m.gamma_plus()[l];
      for (Eigen::Index j = 0; j < es.rows(); ++j)
        esf(j, l) = es(j, l) * (a * src.normals[j].x1 + b * src.normals[j].x2);
    }
  }

  for (int half = 0; half < 2; ++half) {
    const bool upper = half == 0;
    std::vector<Eigen::Index> rows;
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      if ((tgt.nodes[i].x2 >= 0.0) == upper) {
        rows.push_back(static_cast<Eigen::Index>(i));
        pts.push_back(tgt.nodes[i]);
      }
    }
    if (rows.empty()) continue;
    const auto& coef = upper ? m.coef_plus() : m.coef_minus();
    CMatrix et = target_table(pts, m, upper);
    for (Eigen::Index l = 0; l < nx; ++l) et.col(l) *= coef[l];
    CMatrix etf;
    if (need_tgt_n) {
      etf.resize(et.rows(), nx);
      const auto& g = upper ? m.gamma_plus() : m.gamma_minus();
      const double sgn = upper ? -1.0 : 1.0;
      for (Eigen::Index l = 0; l < nx; ++l) {
        const cplx a = kI * xi[l], b = sgn * g[l];
        for (Eigen::Index r = 0; r < et.rows(); ++r) {
          const Vec2 n = tgt.normals[rows[r]];
          etf(r, l) = et(r, l) * (a * n.x1 + b * n.x2);
        }
      }
    }
    auto scatter = [&](CMatrix& dst, const CMatrix& part) {
      for (std::size_t r = 0; r < rows.size(); ++r) dst.row(rows[r]) += part.row(r);
    };
    if (has(mask, Layer::S)) scatter(blocks.S, et * es.transpose());
    if (has(mask, Layer::D)) scatter(blocks.D, et * esf.transpose());
    if (has(mask, Layer::Sp)) scatter(blocks.Sp, etf * es.transpose());
    if (has(mask, Layer::Dp)) scatter(blocks.Dp, etf * esf.transpose());
  }
}

FieldSample sommerfeld_far_apply(const DiscretizedCurve& src, const CVector& mu,
                                 const CVector& rho, const std::vector<Vec2>& targets,
                                 const std::vector<Vec2>& normals, const LayeredMedium& m) {
  if (mu.size() != static_cast<Eigen::Index>(src.size()) || rho.size() != mu.size())
    throw std::invalid_argument("sommerfeld_far_apply: density size mismatch");
  const bool with_n = !normals.empty();
  if (with_n && normals.size() != targets.size())
    throw std::invalid_argument("sommerfeld_far_apply: normals/targets size mismatch");
  const auto& xi = m.rule().nodes;
  const auto& gp = m.gamma_plus();
  const Eigen::Index nx = static_cast<Eigen::Index>(xi.size());

  // first pass: W(xi) = sum_j w_j [mu_j (-i xi n1 - g+ n2) - rho_j] e^{-g+ y2 - i xi y1}
  const CMatrix es = source_table(src, m, true);
  CMatrix q(src.size(), 3);
  for (std::size_t j = 0; j < src.size(); ++j) {
    q(j, 0) = mu(j) * src.normals[j].x1;
    q(j, 1) = mu(j) * src.normals[j].x2;
    q(j, 2) = rho(j);
  }
  const CMatrix g = es.transpose() * q;
  CVector w(nx);
  for (Eigen::Index l = 0; l < nx; ++l) w(l) = -kI * xi[l] * g(l, 0) - gp[l] * g(l, 1) - g(l, 2);

  // second pass, separately above and below the interface
  FieldSample out;
  out.u.resize(targets.size());
  if (with_n) out.dudn.resize(targets.size());
  for (int half = 0; half < 2; ++half) {
    const bool upper = half == 0;
    std::vector<std::size_t> idx;
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if ((targets[i].x2 >= 0.0) == upper) {
        idx.push_back(i);
        pts.push_back(targets[i]);
      }
    }
    if (idx.empty()) continue;
    const auto& coef = upper ? m.coef_plus() : m.coef_minus();
    const auto& gt = upper ? m.gamma_plus() : m.gamma_minus();
    const double sgn = upper ? -1.0 : 1.0;
    CMatrix v(nx, 3);
    for (Eigen::Index l = 0; l < nx; ++l) {
      const cplx c = coef[l] * w(l);
      v(l, 0) = c;
      v(l, 1) = kI * xi[l] * c;
      v(l, 2) = sgn * gt[l] * c;
    }
    const CMatrix r = target_table(pts, m, upper) * v;
    for (std::size_t t = 0; t < idx.size(); ++t) {
      out.u(idx[t]) = r(t, 0);
      if (with_n) out.dudn(idx[t]) = normals[idx[t]].x1 * r(t, 1) + normals[idx[t]].x2 * r(t, 2);
    }
  }
  return out;
}

SommerfeldTransfer::SommerfeldTransfer(const std::vector<DiscretizedCurve>& proxies,
                                       std::shared_ptr<const LayeredMedium> medium)
    : medium_(std::move(medium)) {
  for (const auto& p : proxies) {
    es_.push_back(source_table(p, *medium_, false));
    et_.push_back(target_table(p.nodes, *medium_, true));
    Eigen::VectorXd w(p.size()), n1(p.size()), n2(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      w(j) = p.weights[j];
      n1(j) = p.normals[j].x1;
      n2(j) = p.normals[j].x2;
    }
    w_.push_back(w);
    n1_.push_back(n1);
    n2_.push_back(n2);
  }
}

void SommerfeldTransfer::apply_add(const std::vector<CVector>& in,
                                   std::vector<CVector>& out) const {
  const auto& xi = medium_->rule().nodes;
  const auto& gp = medium_->gamma_plus();
  const auto& cp = medium_->coef_plus();
  const Eigen::Index nx = static_cast<Eigen::Index>(xi.size());
  const std::size_t m = es_.size();
  std::vector<CVector> wj(m);
  CVector total = CVector::Zero(nx);
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::Index n = w_[j].size();
    CMatrix q(n, 3);
    const auto mu = in[j].head(n);
    const auto rho = in[j].tail(n);
    q.col(0) = (mu.array() * (w_[j].array() * n1_[j].array()).cast<cplx>()).matrix();
    q.col(1) = (mu.array() * (w_[j].array() * n2_[j].array()).cast<cplx>()).matrix();
    q.col(2) = (rho.array() * w_[j].array().cast<cplx>()).matrix();
    const CMatrix g = es_[j].transpose() * q;
    wj[j].resize(nx);
    for (Eigen::Index l = 0; l < nx; ++l)
      wj[j](l) = cp[l] * (-kI * xi[l] * g(l, 0) - gp[l] * g(l, 1) - g(l, 2));
    total += wj[j];
  }
  for (std::size_t i = 0; i < m; ++i) {
    const CVector v = total - wj[i];
    CMatrix vv(nx, 3);
    for (Eigen::Index l = 0; l < nx; ++l) {
      vv(l, 0) = v(l);
      vv(l, 1) = kI * xi[l] * v(l);
      vv(l, 2) = -gp[l] * v(l);
    }
    const CMatrix r = et_[i] * vv;
    const Eigen::Index n = w_[i].size();
    out[i].head(n) += r.col(0);
    out[i].tail(n).array() += n1_[i].array().cast<cplx>() * r.col(1).array() +
                              n2_[i].array().cast<cplx>() * r.col(2).array();
  }
}

std::array<cplx, 2> layered_incident_coefficients(double theta, double k_plus, double k_minus) {
  const double a = k_plus * std::cos(theta);
  const double q = k_plus * std::sin(theta);
  const double d = k_minus * k_minus - a * a;
  const cplx p = d >= 0.0 ? cplx(std::sqrt(d), 0.0) : cplx(0.0, std::sqrt(-d));
  return {(q - p) / (q + p), 2.0 * q / (q + p)};
}

IncidentField layered_incident(double theta, double k_plus, double k_minus) {
  if (!(theta > 0.0 && theta < kPi)) throw ConfigError("layered incident angle must lie in (0, pi)");
  if (!(k_plus > 0.0) || !(k_minus > 0.0)) throw ConfigError("wavenumbers must be positive");
  IncidentField f;
  f.kind = IncidentField::Kind::plane_layered;
  f.k = k_plus;
  f.k_minus = k_minus;
  f.theta = theta;
  return f;
}

}  // namespace proxyscat
