#pragma once

// Two-layer medium: wavenumber k_plus for x2 > 0, k_minus for x2 < 0, all
// sources in the upper half-plane.  With gamma(xi, k) = sqrt(xi^2 - k^2) on the
// outgoing branch (positive for |xi| > k, -i sqrt(k^2 - xi^2) otherwise) the
// layered Green's function is g_{k+} + s+ above the interface and s- below,
//   s+(x, y) = 1/(4 pi) int (k-^2 - k+^2) / (g+ (g+ + g-)^2) e^{-g+ (x2 + y2)} e^{i xi (x1 - y1)} dxi
//   s-(x, y) = 1/(4 pi) int 2 / (g+ + g-) e^{g- x2 - g+ y2} e^{i xi (x1 - y1)} dxi

#include <array>
#include <memory>
#include <vector>

#include "proxyscat/geom.hpp"
#include "proxyscat/incident.hpp"
#include "proxyscat/linalg.hpp"
#include "proxyscat/potentials.hpp"

namespace proxyscat {

struct SommerfeldParams {
  double k_plus = 1.0;
  double k_minus = 1.0;
  double delta = 1.0;   // lowest source height
  double extent = 1.0;  // |x1 - y1| <= 2 * extent
  double height = 1.0;  // x2, y2 <= height
  double tol = 1e-10;
  double xi_max = 0.0;  // 0: truncation law
  int panel_order = 16;
  int graded_order = 10;
};

struct SommerfeldPanel {
  double a, b;
  bool sqrt_map;
};

struct SommerfeldRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  // Nearest branch point and xi minus it, kept exact near the branch points.
  std::vector<double> anchors;
  std::vector<double> offsets;
  std::vector<SommerfeldPanel> panels;  // positive half only
  double xi_max = 0.0;
  SommerfeldParams params;

  std::size_t size() const { return nodes.size(); }
};

/// k_plus + log(1/tol) / delta
double truncation_law(double k_plus, double delta, double tol);
SommerfeldRule build_sommerfeld_rule(const SommerfeldParams& params);

cplx gamma_branch(double xi, double k);
/// Same branch, with xi = anchor + offset; exact near xi = +-k when anchor = +-k.
cplx gamma_branch(double anchor, double offset, double k);

class LayeredMedium {
 public:
  LayeredMedium(double k_plus, double k_minus, SommerfeldRule rule);

  double k_plus() const { return k_plus_; }
  double k_minus() const { return k_minus_; }
  const SommerfeldRule& rule() const { return rule_; }
  double delta() const { return rule_.params.delta; }

  // Per rule node: gamma_plus, gamma_minus, weight * coefficient of s+ and s-.
  const std::vector<cplx>& gamma_plus() const { return gp_; }
  const std::vector<cplx>& gamma_minus() const { return gm_; }
  const std::vector<cplx>& coef_plus() const { return cp_; }
  const std::vector<cplx>& coef_minus() const { return cm_; }

 private:
  double k_plus_, k_minus_;
  SommerfeldRule rule_;
  std::vector<cplx> gp_, gm_, cp_, cm_;
};

/// Value, gradients and the mixed Hessian hxy[a][b] = d/dx_a d/dy_b.
struct KernelEval {
  cplx value{};
  std::array<cplx, 2> grad_x{};
  std::array<cplx, 2> grad_y{};
  std::array<std::array<cplx, 2>, 2> hxy{};
};

/// x2 >= 0, y2 >= delta.
KernelEval s_plus(Vec2 x, Vec2 y, const LayeredMedium& medium);
/// x2 <= 0, y2 >= delta.
KernelEval s_minus(Vec2 x, Vec2 y, const LayeredMedium& medium);
/// g_{k+} + s+ above the interface, s- below.
KernelEval layered_green(Vec2 x, Vec2 y, const LayeredMedium& medium);

/// Adds the Sommerfeld part of the layered kernel to blocks already holding
/// the free-space part (zero rows for targets below the interface).
void add_correction_blocks(LayerBlocks& blocks, const DiscretizedCurve& source,
                           const DiscretizedCurve& target, const LayeredMedium& medium,
                           unsigned mask);

/// Sommerfeld part of D[mu] - S[rho] from the source curve, two-pass evaluation.
FieldSample sommerfeld_far_apply(const DiscretizedCurve& source, const CVector& mu,
                                 const CVector& rho, const std::vector<Vec2>& targets,
                                 const std::vector<Vec2>& normals, const LayeredMedium& medium);

/// Cached two-pass Sommerfeld transfer between proxies, excluding self terms.
class SommerfeldTransfer {
 public:
  SommerfeldTransfer(const std::vector<DiscretizedCurve>& proxies,
                     std::shared_ptr<const LayeredMedium> medium);

  /// in[j] = [mu; rho] on proxy j (unscaled); out[i] += Sommerfeld part of
  /// sum_{j != i} D_{Pj}[mu_j] - S_{Pj}[rho_j] and its normal derivative on P_i.
  void apply_add(const std::vector<CVector>& in, std::vector<CVector>& out) const;

 private:
  std::shared_ptr<const LayeredMedium> medium_;
  std::vector<CMatrix> es_, et_;
  std::vector<Eigen::VectorXd> w_, n1_, n2_;
};

/// Downward plane wave e^{i(a x1 - q x2)} with a = k+ cos(theta), q = k+ sin(theta),
/// reflected R e^{i(a x1 + q x2)} and transmitted T e^{i(a x1 - p x2)},
/// p = sqrt(k-^2 - a^2), R = (q - p)/(q + p), T = 2q/(q + p).
IncidentField layered_incident(double theta, double k_plus, double k_minus);
/// Reflection and transmission coefficients of layered_incident.
std::array<cplx, 2> layered_incident_coefficients(double theta, double k_plus, double k_minus);

}  // namespace proxyscat
