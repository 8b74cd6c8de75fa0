#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace proxyscat {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
inline double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }
inline double norm(Vec2 a) { return std::hypot(a.x1, a.x2); }

/// Gauss-Legendre rule on [-1, 1].
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadRule gauss_legendre(int n);

enum class ShapeKind { ellipse, star_ellipse };

/// c + r(t) (a cos t, b sin t) with r(t) = 1 + star_amplitude cos(star_frequency t);
/// r == 1 for plain ellipses.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::ellipse;
  double a = 1.0;
  double b = 1.0;
  Vec2 center;
  double star_amplitude = 0.1;
  int star_frequency = 7;

  double radius(double t) const;
  Vec2 point(double t) const;
  Vec2 deriv(double t) const;
  Vec2 deriv2(double t) const;
  /// Half widths of the axis-aligned bounding box.
  Vec2 half_extent() const;
  bool contains(Vec2 p) const;
  void validate() const;
};

ShapeSpec ellipse(double a, double b, Vec2 center = {});
ShapeSpec star_ellipse(double a, double b, Vec2 center = {}, double amplitude = 0.1,
                       int frequency = 7);

struct RectProxySpec {
  Vec2 center;
  double width = 1.0;
  double height = 1.0;
  int panels_horizontal = 1;
  int panels_vertical = 1;
  int panel_order = 16;

  int n_points() const { return 2 * panel_order * (panels_horizontal + panels_vertical); }
  bool contains(Vec2 p) const;
  void validate() const;
};

struct DiscretizedCurve {
  std::vector<Vec2> nodes;
  std::vector<Vec2> normals;
  std::vector<double> weights;
  std::vector<double> params;
  /// x'(t) and x''(t) at the nodes; filled for parametrized scatterers only.
  std::vector<Vec2> d1;
  std::vector<Vec2> d2;
  bool closed = true;

  std::size_t size() const { return nodes.size(); }
};

DiscretizedCurve discretize_scatterer(const ShapeSpec& spec, int n);
DiscretizedCurve discretize_proxy(const RectProxySpec& spec);
DiscretizedCurve translated(const DiscretizedCurve& curve, Vec2 shift);

/// Panel counts (horizontal, vertical) for a width x height rectangle so that
/// n_p = 2 * order * (ph + pv), split in proportion to the side lengths.
std::pair<int, int> split_panels(double width, double height, int n_p, int order);

RectProxySpec proxy_for(const ShapeSpec& spec, double margin, int panels_horizontal,
                        int panels_vertical, int panel_order = 16);
RectProxySpec proxy_with_points(const ShapeSpec& spec, double margin, int n_p,
                                int panel_order = 16);

/// Distance between two axis-aligned rectangles (0 when they intersect).
double rect_gap(const RectProxySpec& p, const RectProxySpec& q);
/// Smallest pairwise distance; throws GeometryError if any two proxies touch.
double check_proxies_disjoint(const std::vector<RectProxySpec>& proxies);
/// Margin m for which the closest pair of margin-m proxies is exactly m apart.
double equal_gap_margin(const std::vector<ShapeSpec>& shapes);

struct PhotonicOptions {
  int columns = 41;  // i <= columns
  int rows = 21;     // j <= rows
  bool remove_channel = true;
};
std::vector<ShapeSpec> photonic_lattice(const PhotonicOptions& opt = {});

enum class CenterRule { printed, spaced };

struct LayeredArrayOptions {
  std::uint64_t seed = 1;
  double amplitude = 0.1;  // perturbations uniform in [-amplitude, amplitude]
  CenterRule rule = CenterRule::printed;
  int per_row = 0;  // 0 keeps all 21 + 20, otherwise i <= per_row in each row
};
std::vector<ShapeSpec> layered_array(const LayeredArrayOptions& opt = {});

/// SplitMix64.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform();

 private:
  std::uint64_t state_;
};

}  // namespace proxyscat
