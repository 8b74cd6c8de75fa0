#pragma once

#include <memory>
#include <vector>

#include "proxyscat/geom.hpp"
#include "proxyscat/incident.hpp"
#include "proxyscat/linalg.hpp"
#include "proxyscat/potentials.hpp"
#include "proxyscat/scatmat.hpp"

namespace proxyscat {

class SommerfeldTransfer;

/// Stacked per-proxy blocks [u; du/dn], each of length 2 n_p.
struct BoundaryState {
  std::vector<Eigen::Index> offsets;  // size M + 1
  CVector data;
  bool scaled = true;

  std::size_t blocks() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  Eigen::Index block_size(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  auto block(std::size_t i) { return data.segment(offsets[i], block_size(i)); }
  auto block(std::size_t i) const { return data.segment(offsets[i], block_size(i)); }
};

struct Inclusion {
  InclusionSpec spec;
  DiscretizedCurve gamma;
  DiscretizedCurve proxy;
  std::shared_ptr<const ScatteringMatrix> a;
};

/// Off-diagonal coupling T_ij = [D, -S; D', -S'] from P_j to P_i, T_ii = 0,
/// acting on weight-scaled states.
class TransferOperator {
 public:
  enum class Mode { matrix_free, dense_cached };

  TransferOperator(std::vector<DiscretizedCurve> proxies, KernelContext ctx,
                   Mode mode = Mode::matrix_free);
  ~TransferOperator();

  CVector apply(const CVector& x) const;
  /// Dense scaled block (zero for i == j).
  CMatrix block(std::size_t i, std::size_t j) const;
  const std::vector<Eigen::Index>& offsets() const { return offsets_; }
  Mode mode() const { return mode_; }
  const std::vector<DiscretizedCurve>& proxies() const { return proxies_; }

 private:
  void apply_free(const std::vector<CVector>& in, std::vector<CVector>& out) const;

  std::vector<DiscretizedCurve> proxies_;
  KernelContext ctx_;
  Mode mode_;
  std::vector<Eigen::Index> offsets_;
  std::vector<Eigen::VectorXd> sqrt_w_;
  std::vector<std::vector<CMatrix>> dense_;
  std::unique_ptr<SommerfeldTransfer> sommerfeld_;
};

/// Chooses dense caching when the blocks fit in the budget.
TransferOperator::Mode choose_transfer_mode(const std::vector<DiscretizedCurve>& proxies,
                                            const KernelContext& ctx, double budget_bytes);

struct MultiSystem {
  std::vector<Inclusion> inclusions;
  KernelContext ctx;
  IncidentField incident;
  std::unique_ptr<TransferOperator> transfer;
  BoundaryState b;  // incident data, scaled
};

struct SystemOptions {
  TransferOperator::Mode mode = TransferOperator::Mode::matrix_free;
  bool auto_mode = true;
  double dense_budget_bytes = 1.0e9;
};

/// Discretizes, builds (or reuses) the scattering matrices and samples the incident data.
MultiSystem make_system(const std::vector<InclusionSpec>& specs, const KernelContext& ctx,
                        const IncidentField& incident, ScatteringMatrixCache& cache,
                        const SystemOptions& opt = {});

/// Samples (u_in, n . grad u_in) at every proxy node; unscaled unless a scale is given.
BoundaryState incident_data(const IncidentField& field, const std::vector<DiscretizedCurve>& proxies);
BoundaryState scale(const BoundaryState& s, const std::vector<DiscretizedCurve>& proxies);
BoundaryState unscale(const BoundaryState& s, const std::vector<DiscretizedCurve>& proxies);

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 500;
  int restart = 0;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> history;
  double residual = 0.0;
  double seconds = 0.0;
};

struct MultiSolution {
  BoundaryState x;  // net scattered data on each proxy, scaled
  SolveReport report;
};

/// A x for block-diagonal A.
CVector apply_a(const MultiSystem& sys, const CVector& x);
/// v - (A + I) T v
CVector apply_system(const MultiSystem& sys, const CVector& v);

MultiSolution solve(const MultiSystem& sys, const SolveOptions& opt);

/// ||(I - (A + I) T) x - A b|| / ||A b||, recomputed from scratch.
double residual_check(const MultiSolution& sol, const MultiSystem& sys);

/// Scattered field sum_j D_{Pj}[u_j] - S_{Pj}[du_j] at arbitrary points (no masking).
FieldSample eval_representation(const MultiSolution& sol, const MultiSystem& sys,
                                const std::vector<Vec2>& targets,
                                const std::vector<Vec2>& normals = {});

enum class Mask : int { exterior = 0, inside_proxy = 1, inside_scatterer = 2 };

struct FieldGrid {
  std::vector<Vec2> points;
  CVector u_sc;
  CVector u_tot;
  std::vector<int> mask;
};

/// Total and scattered field; masked points are set to zero.
FieldGrid eval_field(const MultiSolution& sol, const MultiSystem& sys,
                     const std::vector<Vec2>& targets);
int mask_of(const MultiSystem& sys, Vec2 p);

/// Scattered data of inclusion i alone on its proxy, x_i - (T x)_i, unscaled.
std::vector<CVector> individual_scattered(const MultiSolution& sol, const MultiSystem& sys);

/// max over scatterers of |u_tot| on Gamma_i, from boundary densities recovered
/// through each proxy, divided by max |u_in| on the scatterers.
double dirichlet_residual(const MultiSolution& sol, const MultiSystem& sys);

}  // namespace proxyscat
