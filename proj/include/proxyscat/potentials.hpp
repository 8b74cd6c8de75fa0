#pragma once

#include <array>
#include <memory>
#include <vector>

#include "proxyscat/geom.hpp"
#include "proxyscat/linalg.hpp"

namespace proxyscat {

class LayeredMedium;

/// Free space with wavenumber k, or the two-layer medium (k = k_plus).
struct KernelContext {
  double k = 1.0;
  std::shared_ptr<const LayeredMedium> layered;

  static KernelContext free_space(double k);
  static KernelContext layered_medium(std::shared_ptr<const LayeredMedium> medium);
  bool is_layered() const { return layered != nullptr; }
};

// Free-space kernel g = (i/4) H0(k|x-y|) and its derivatives.
cplx gk(double k, Vec2 x, Vec2 y);
std::array<cplx, 2> gk_grad_x(double k, Vec2 x, Vec2 y);
std::array<cplx, 2> gk_grad_y(double k, Vec2 x, Vec2 y);
/// n_x . grad_x  n_y . grad_y  g(x, y)
cplx gk_cross(double k, Vec2 x, Vec2 y, Vec2 nx, Vec2 ny);

enum class Layer : unsigned { S = 1u, D = 2u, Sp = 4u, Dp = 8u };
inline constexpr unsigned kAllLayers = 15u;
inline unsigned operator|(Layer a, Layer b) {
  return static_cast<unsigned>(a) | static_cast<unsigned>(b);
}
inline unsigned operator|(unsigned a, Layer b) { return a | static_cast<unsigned>(b); }
inline bool has(unsigned mask, Layer l) { return (mask & static_cast<unsigned>(l)) != 0; }

/// Nystrom matrices (target rows, source columns, source weights included).
///   S  : g            D  : n_y . grad_y g
///   Sp : n_x . grad_x g    Dp : n_x . grad_x n_y . grad_y g
/// Only the kinds in the mask are filled.
struct LayerBlocks {
  CMatrix S, D, Sp, Dp;
};

/// Free-space part only; rows of targets below the interface are zeroed on request.
LayerBlocks free_layer_blocks(const DiscretizedCurve& source, const DiscretizedCurve& target,
                              double k, unsigned mask, bool zero_below_interface);
/// Source and target must be disjoint; a shared node is a usage error.
LayerBlocks layer_blocks(const DiscretizedCurve& source, const DiscretizedCurve& target,
                         const KernelContext& ctx, unsigned mask);
CMatrix layer_matrix(Layer kind, const DiscretizedCurve& source, const DiscretizedCurve& target,
                     const KernelContext& ctx);

/// Weights of the logarithmic quadrature on 2n equispaced nodes, indexed by |i - j|.
std::vector<double> log_quadrature_weights(int n_nodes);

/// On-curve S and D (principal value, no jump term) of a parametrized closed curve.
struct SelfOperators {
  CMatrix S, D;
};
SelfOperators self_operators(const DiscretizedCurve& curve, const KernelContext& ctx);
CMatrix self_operator(Layer kind, const DiscretizedCurve& curve, const KernelContext& ctx);

/// 1/2 + D + ik S on the curve.
CMatrix combined_field_matrix(const DiscretizedCurve& curve, const KernelContext& ctx);

/// sigma = -(1/2 + D + ik S)^{-1} u_in.
CVector solve_combined_field(const DiscretizedCurve& curve, const KernelContext& ctx,
                             const CVector& u_in_on_curve);

struct FieldSample {
  CVector u;
  CVector dudn;  // empty unless target normals were given
};

/// u_sc = D[sigma] + ik S[sigma] at off-curve targets.
FieldSample eval_scattered(const DiscretizedCurve& curve, const CVector& sigma,
                           const std::vector<Vec2>& targets, const std::vector<Vec2>& normals,
                           const KernelContext& ctx);

/// Direct combined-field solve over several disjoint curves.
struct MonolithicSolution {
  std::vector<CVector> sigma;
};
MonolithicSolution solve_monolithic(const std::vector<DiscretizedCurve>& curves,
                                    const KernelContext& ctx,
                                    const std::vector<CVector>& u_in_on_curves);
FieldSample eval_monolithic(const std::vector<DiscretizedCurve>& curves,
                            const MonolithicSolution& sol, const std::vector<Vec2>& targets,
                            const std::vector<Vec2>& normals, const KernelContext& ctx);

/// Curve view of loose target points (normals optional, weights unused).
DiscretizedCurve point_cloud(const std::vector<Vec2>& points, const std::vector<Vec2>& normals);

}  // namespace proxyscat
