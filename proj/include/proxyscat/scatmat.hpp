#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "proxyscat/geom.hpp"
#include "proxyscat/linalg.hpp"
#include "proxyscat/potentials.hpp"

namespace proxyscat {

enum class MediumTag : std::uint32_t { free_space = 0, layered = 1 };

/// Maps (u_in, du_in/dn) on the proxy to (u_sc, du_sc/dn), both blocked as
/// [values; normal derivatives] and scaled by the square roots of the proxy
/// weights: A_scaled = W^{1/2} A W^{-1/2}.
struct ScatteringMatrix {
  int n_p = 0;
  CMatrix entries;
  Eigen::VectorXd sqrt_weights;  // length 2 n_p; empty when read from a file
  MediumTag medium = MediumTag::free_space;
  double k_plus = 0.0;
  double k_minus = 0.0;
  std::string key;  // translation-invariant identity of (shape, discretization, proxy, medium)
};

/// Scatterer, its discretization and its proxy.
struct InclusionSpec {
  ShapeSpec shape;
  int n_gamma = 256;
  RectProxySpec proxy;
};

std::string inclusion_key(const InclusionSpec& spec, const KernelContext& ctx);

ScatteringMatrix build_scattering_matrix(const DiscretizedCurve& gamma,
                                         const DiscretizedCurve& proxy,
                                         const KernelContext& ctx);
/// Column-by-column construction from charge and dipole fields at the proxy
/// nodes (slow; cross-validation only).
ScatteringMatrix build_scattering_matrix_columnwise(const DiscretizedCurve& gamma,
                                                    const DiscretizedCurve& proxy,
                                                    const KernelContext& ctx);

/// Scaled in, scaled out.
CVector apply(const ScatteringMatrix& a, const CVector& incoming);

/// W^{1/2} on stacked [values; derivatives] data.
CVector scale_state(const ScatteringMatrix& a, const CVector& unscaled);
CVector unscale_state(const ScatteringMatrix& a, const CVector& scaled);

void write_scattering_matrix(const std::filesystem::path& path, const ScatteringMatrix& a);
ScatteringMatrix read_scattering_matrix(const std::filesystem::path& path);

/// Returns the matrix for a rigidly shifted copy of `original`; no rebuild.
/// Throws if `shifted` is not a translate (horizontal only in a layered medium).
std::shared_ptr<const ScatteringMatrix> translate_reuse(
    std::shared_ptr<const ScatteringMatrix> a, const InclusionSpec& shifted,
    const KernelContext& ctx);

/// Builds each distinct inclusion once.
class ScatteringMatrixCache {
 public:
  std::shared_ptr<const ScatteringMatrix> get(const InclusionSpec& spec, const KernelContext& ctx);
  int builds() const { return builds_; }
  int hits() const { return hits_; }

 private:
  std::map<std::string, std::shared_ptr<const ScatteringMatrix>> cache_;
  std::mutex mutex_;
  int builds_ = 0;
  int hits_ = 0;
};

}  // namespace proxyscat
