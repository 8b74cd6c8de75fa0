#include "proxyscat/geom.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "proxyscat/errors.hpp"

namespace proxyscat {

namespace {

constexpr double kPi = std::numbers::pi;

// Golden-section maximization of f on [lo, hi].
template <class F>
double golden_max(F f, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

}  // namespace

QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) {
        // one more evaluation of the derivative at the converged node
        p0 = 1.0;
        p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double ShapeSpec::radius(double t) const {
  if (kind == ShapeKind::ellipse) return 1.0;
  return 1.0 + star_amplitude * std::cos(star_frequency * t);
}

Vec2 ShapeSpec::point(double t) const {
  const double r = radius(t);
  return {center.x1 + r * a * std::cos(t), center.x2 + r * b * std::sin(t)};
}

Vec2 ShapeSpec::deriv(double t) const {
  const double c = std::cos(t), s = std::sin(t);
  const double r = radius(t);
  double dr = 0.0;
  if (kind == ShapeKind::star_ellipse)
    dr = -star_amplitude * star_frequency * std::sin(star_frequency * t);
  return {dr * a * c - r * a * s, dr * b * s + r * b * c};
}

Vec2 ShapeSpec::deriv2(double t) const {
  const double c = std::cos(t), s = std::sin(t);
  const double r = radius(t);
  double dr = 0.0, ddr = 0.0;
  if (kind == ShapeKind::star_ellipse) {
    const double f = star_frequency;
    dr = -star_amplitude * f * std::sin(f * t);
    ddr = -star_amplitude * f * f * std::cos(f * t);
  }
  return {ddr * a * c - 2.0 * dr * a * s - r * a * c, ddr * b * s + 2.0 * dr * b * c - r * b * s};
}

Vec2 ShapeSpec::half_extent() const {
  if (kind == ShapeKind::ellipse) return {a, b};
  const int m = 4096;
  const double h = 2.0 * kPi / m;
  Vec2 ext{0.0, 0.0};
  for (int comp = 0; comp < 2; ++comp) {
    auto f = [&](double t) {
      const double r = radius(t);
      const Vec2 p{r * a * std::cos(t), r * b * std::sin(t)};
      return std::fabs(comp == 0 ? p.x1 : p.x2);
    };
    int best = 0;
    double fbest = -1.0;
    for (int j = 0; j < m; ++j) {
      const double v = f(j * h);
      if (v > fbest) {
        fbest = v;
        best = j;
      }
    }
    const double refined = golden_max(f, (best - 1) * h, (best + 1) * h);
    (comp == 0 ? ext.x1 : ext.x2) = std::max(fbest, refined);
  }
  return ext;
}

bool ShapeSpec::contains(Vec2 p) const {
  const double u = (p.x1 - center.x1) / a;
  const double v = (p.x2 - center.x2) / b;
  const double rho = std::hypot(u, v);
  return rho < radius(std::atan2(v, u));
}

void ShapeSpec::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("shape: semi-axes must be positive");
  if (kind == ShapeKind::star_ellipse) {
    if (!(std::fabs(star_amplitude) < 1.0))
      throw ConfigError("shape: star amplitude must satisfy |amplitude| < 1");
    if (star_frequency < 0) throw ConfigError("shape: star frequency must be non-negative");
  }
}

ShapeSpec ellipse(double a, double b, Vec2 center) {
  ShapeSpec s;
  s.kind = ShapeKind::ellipse;
  s.a = a;
  s.b = b;
  s.center = center;
  return s;
}

ShapeSpec star_ellipse(double a, double b, Vec2 center, double amplitude, int frequency) {
  ShapeSpec s;
  s.kind = ShapeKind::star_ellipse;
  s.a = a;
  s.b = b;
  s.center = center;
  s.star_amplitude = amplitude;
  s.star_frequency = frequency;
  return s;
}

bool RectProxySpec::contains(Vec2 p) const {
  return std::fabs(p.x1 - center.x1) < 0.5 * width && std::fabs(p.x2 - center.x2) < 0.5 * height;
}

void RectProxySpec::validate() const {
  if (!(width > 0.0) || !(height > 0.0)) throw ConfigError("proxy: dimensions must be positive");
  if (panels_horizontal < 1 || panels_vertical < 1)
    throw ConfigError("proxy: need at least one panel per side");
  if (panel_order < 4 || panel_order > 32) throw ConfigError("proxy: panel order must be in [4, 32]");
}

DiscretizedCurve discretize_scatterer(const ShapeSpec& spec, int n) {
  spec.validate();
  if (n < 16 || n % 2 != 0)
    throw ConfigError("scatterer discretization needs an even node count >= 16, got " +
                      std::to_string(n));
  DiscretizedCurve c;
  c.nodes.resize(n);
  c.normals.resize(n);
  c.weights.resize(n);
  c.params.resize(n);
  c.d1.resize(n);
  c.d2.resize(n);
  const double h = 2.0 * kPi / n;
  ShapeSpec local = spec;
  local.center = {};
  for (int j = 0; j < n; ++j) {
    const double t = j * h;
    const Vec2 p = local.point(t);
    const Vec2 d = local.deriv(t);
    const double speed = norm(d);
    c.params[j] = t;
    c.nodes[j] = spec.center + p;
    c.normals[j] = {d.x2 / speed, -d.x1 / speed};
    c.weights[j] = h * speed;
    c.d1[j] = d;
    c.d2[j] = local.deriv2(t);
  }
  return c;
}

DiscretizedCurve discretize_proxy(const RectProxySpec& spec) {
  spec.validate();
  const QuadRule gl = gauss_legendre(spec.panel_order);
  DiscretizedCurve c;
  const double hw = 0.5 * spec.width, hh = 0.5 * spec.height;
  struct Side {
    Vec2 start, dir, normal;
    double length;
    int panels;
  };
  const Side sides[4] = {
      {{-hw, -hh}, {1.0, 0.0}, {0.0, -1.0}, spec.width, spec.panels_horizontal},
      {{hw, -hh}, {0.0, 1.0}, {1.0, 0.0}, spec.height, spec.panels_vertical},
      {{hw, hh}, {-1.0, 0.0}, {0.0, 1.0}, spec.width, spec.panels_horizontal},
      {{-hw, hh}, {0.0, -1.0}, {-1.0, 0.0}, spec.height, spec.panels_vertical},
  };
  const std::size_t n = spec.n_points();
  c.nodes.reserve(n);
  c.normals.reserve(n);
  c.weights.reserve(n);
  c.params.reserve(n);
  double arc = 0.0;
  for (const Side& s : sides) {
    const double plen = s.length / s.panels;
    for (int p = 0; p < s.panels; ++p) {
      for (int q = 0; q < spec.panel_order; ++q) {
        const double along = (p + 0.5 * (gl.nodes[q] + 1.0)) * plen;
        c.nodes.push_back(spec.center + (s.start + along * s.dir));
        c.normals.push_back(s.normal);
        c.weights.push_back(0.5 * plen * gl.weights[q]);
        c.params.push_back(arc + along);
      }
    }
    arc += s.length;
  }
  return c;
}

DiscretizedCurve translated(const DiscretizedCurve& curve, Vec2 shift) {
  DiscretizedCurve out = curve;
  for (auto& p : out.nodes) p = p + shift;
  return out;
}

std::pair<int, int> split_panels(double width, double height, int n_p, int order) {
  if (order < 1 || n_p % (2 * order) != 0)
    throw ConfigError("proxy: n_p = " + std::to_string(n_p) + " is not a multiple of 2 * order = " +
                      std::to_string(2 * order));
  const int total = n_p / (2 * order);
  if (total < 2) throw ConfigError("proxy: n_p too small for one panel per side");
  int ph = static_cast<int>(std::lround(total * width / (width + height)));
  ph = std::clamp(ph, 1, total - 1);
  return {ph, total - ph};
}

RectProxySpec proxy_for(const ShapeSpec& spec, double margin, int panels_horizontal,
                        int panels_vertical, int panel_order) {
  if (!(margin > 0.0)) throw ConfigError("proxy margin must be positive");
  const Vec2 ext = spec.half_extent();
  RectProxySpec p;
  p.center = spec.center;
  p.width = 2.0 * (ext.x1 + margin);
  p.height = 2.0 * (ext.x2 + margin);
  p.panels_horizontal = panels_horizontal;
  p.panels_vertical = panels_vertical;
  p.panel_order = panel_order;
  p.validate();
  return p;
}

RectProxySpec proxy_with_points(const ShapeSpec& spec, double margin, int n_p, int panel_order) {
  RectProxySpec p = proxy_for(spec, margin, 1, 1, panel_order);
  const auto [ph, pv] = split_panels(p.width, p.height, n_p, panel_order);
  p.panels_horizontal = ph;
  p.panels_vertical = pv;
  return p;
}

double rect_gap(const RectProxySpec& p, const RectProxySpec& q) {
  const double dx = std::max(0.0, std::fabs(p.center.x1 - q.center.x1) - 0.5 * (p.width + q.width));
  const double dy =
      std::max(0.0, std::fabs(p.center.x2 - q.center.x2) - 0.5 * (p.height + q.height));
  return std::hypot(dx, dy);
}

double check_proxies_disjoint(const std::vector<RectProxySpec>& proxies) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    for (std::size_t j = i + 1; j < proxies.size(); ++j) {
      const double g = rect_gap(proxies[i], proxies[j]);
      if (!(g > 0.0))
        throw GeometryError("proxies " + std::to_string(i) + " and " + std::to_string(j) +
                            " overlap or touch");
      best = std::min(best, g);
    }
  }
  return best;
}

double equal_gap_margin(const std::vector<ShapeSpec>& shapes) {
  if (shapes.size() < 2) throw ConfigError("equal-gap margin needs at least two shapes");
  std::vector<Vec2> ext(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) ext[i] = shapes[i].half_extent();
  auto min_gap = [&](double m) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      for (std::size_t j = i + 1; j < shapes.size(); ++j) {
        const double dx = std::max(0.0, std::fabs(shapes[i].center.x1 - shapes[j].center.x1) -
                                            (ext[i].x1 + ext[j].x1 + 2.0 * m));
        const double dy = std::max(0.0, std::fabs(shapes[i].center.x2 - shapes[j].center.x2) -
                                            (ext[i].x2 + ext[j].x2 + 2.0 * m));
        best = std::min(best, std::hypot(dx, dy));
      }
    }
    return best;
  };
  const double g0 = min_gap(0.0);
  if (!(g0 > 0.0)) throw GeometryError("shape bounding boxes overlap; no admissible proxy margin");
  double lo = 0.0, hi = g0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * g0; ++it) {
    const double mid = 0.5 * (lo + hi);
    (min_gap(mid) > mid ? lo : hi) = mid;
  }
  return lo;
}

std::vector<ShapeSpec> photonic_lattice(const PhotonicOptions& opt) {
  if (opt.columns < 1 || opt.columns > 41 || opt.rows < 1 || opt.rows > 21)
    throw ConfigError("photonic lattice: columns must be in [1, 41] and rows in [1, 21]");
  std::vector<ShapeSpec> out;
  for (int i = 1; i <= opt.columns; ++i) {
    for (int j = 1; j <= opt.rows; ++j) {
      if (opt.remove_channel && j == 11 && i <= 34) continue;
      const double x1 = -1.0 + (i - 1) * 0.05;
      const double x2 = (i % 2 == 0 ? -1.0 : -0.95) + (j - 1) * 0.1;
      out.push_back(star_ellipse(0.05 / 3.0, 0.1 / 3.0, {x1, x2}));
    }
  }
  return out;
}

std::vector<ShapeSpec> layered_array(const LayeredArrayOptions& opt) {
  SplitMix64 rng(opt.seed);
  auto eta = [&] { return opt.amplitude * (2.0 * rng.uniform() - 1.0); };
  std::vector<ShapeSpec> out;
  const int counts[2] = {21, 20};
  const double offsets[2] = {-10.0, -9.5};
  const double heights[2] = {1.6, 3.6};
  for (int row = 0; row < 2; ++row) {
    for (int i = 1; i <= counts[row]; ++i) {
      const double e1 = eta();
      const double e2 = eta();
      if (opt.per_row > 0 && i > opt.per_row) continue;
      const double base = opt.rule == CenterRule::printed ? (offsets[row] + (i - 1)) * 3.0
                                                          : offsets[row] + (i - 1) * 3.0;
      out.push_back(star_ellipse(1.0, 0.5, {base + e1, heights[row] + e2}));
    }
  }
  return out;
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

}  // namespace proxyscat
