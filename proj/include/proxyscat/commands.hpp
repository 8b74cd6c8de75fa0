#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proxyscat/config.hpp"
#include "proxyscat/multiscat.hpp"

namespace proxyscat {

struct ScatmatOutcome {
  ScatteringMatrix a;
  double seconds = 0.0;
  double gamma_resolution = 0.0;  // relative size of the top Fourier modes of a plane-wave density
};
ScatmatOutcome run_scatmat(const RunConfig& cfg);

struct SolveOutcome {
  std::vector<InclusionSpec> specs;
  MultiSystem sys;
  MultiSolution sol;
  std::map<std::string, double> seconds;
  double dirichlet = -1.0;
  double self_convergence = -1.0;  // < 0 when no reference was requested
  std::vector<Vec2> probes;
  int n_p = 0;
};
/// n_p_override > 0 replaces the configured proxy resolution.
SolveOutcome run_solve(const RunConfig& cfg, int n_p_override = 0, bool with_diagnostics = true);

/// Exterior probe ring at least one wavelength outside every proxy.
std::vector<Vec2> default_probes(const MultiSystem& sys);
/// max |u - u_ref| / max |u_ref| at the probes.
double probe_difference(const SolveOutcome& coarse, const SolveOutcome& fine,
                        const std::vector<Vec2>& probes);

struct ConvergenceRow {
  double value = 0.0;
  int n_p = 0;
  double eps_a = 0.0;
};
std::vector<ConvergenceRow> run_convergence(const RunConfig& cfg);
/// Config with one sweep value applied.
RunConfig with_sweep_value(const RunConfig& cfg, const std::string& parameter, double value);

void write_solution(const std::filesystem::path& path, const RunConfig& cfg, int n_p,
                    const MultiSolution& sol);
struct StoredSolution {
  std::string config_text;
  int n_p = 0;
  BoundaryState x;
};
StoredSolution read_solution(const std::filesystem::path& path);

std::string field_csv(const FieldGrid& g);

/// Runs scatmat | solve | convergence | fieldgrid, writing outputs under out_dir.
/// Returns the process exit code; failures leave a JSON error report.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::filesystem::path& out_dir);

}  // namespace proxyscat
