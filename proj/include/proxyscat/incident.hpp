#pragma once

#include <array>

#include "proxyscat/geom.hpp"
#include "proxyscat/linalg.hpp"

namespace proxyscat {

/// Incoming fields.
///   plane          e^{ik(cos(theta) x1 + sin(theta) x2)}
///   point_source   g_k(x, source)
///   plane_layered  downward plane wave in the upper layer with its reflected
///                  and transmitted parts (see layered_incident)
struct IncidentField {
  enum class Kind { plane, point_source, plane_layered };

  Kind kind = Kind::plane;
  double k = 1.0;
  double theta = 0.0;
  Vec2 source;
  double k_minus = 1.0;

  cplx value(Vec2 x) const;
  std::array<cplx, 2> gradient(Vec2 x) const;

  static IncidentField plane(double k, double theta = 0.0);
  static IncidentField point_source(double k, Vec2 source);
};

}  // namespace proxyscat
