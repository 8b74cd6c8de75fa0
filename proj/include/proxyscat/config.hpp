#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proxyscat/geom.hpp"
#include "proxyscat/incident.hpp"
#include "proxyscat/potentials.hpp"
#include "proxyscat/scatmat.hpp"

namespace proxyscat {

struct MediumConfig {
  bool layered = false;
  double k = 1.0;
  double k_plus = 1.0, k_minus = 1.0;
  double delta = 0.0;   // 0: lowest proxy edge
  double extent = 0.0;  // 0: half the horizontal span of the proxies
  double height = 0.0;  // 0: highest proxy edge
  double sommerfeld_tol = 1e-10;
};

struct IncidentConfig {
  std::string kind = "plane";  // plane | point_source | plane_lm
  double theta = 0.0;
  Vec2 source;
};

struct GeometryConfig {
  std::string generator;  // empty (explicit shapes) | photonic | layered_array | two_ellipse
  std::vector<ShapeSpec> shapes;
  PhotonicOptions photonic;
  LayeredArrayOptions layered_array;
  double ellipse_a = 4.0;  // two_ellipse: full horizontal axis
  double separation = 1.0;
  double base_height = 0.0;  // two_ellipse: center of the lower ellipse
};

struct ProxyConfig {
  bool equal_gap = true;
  double margin = 0.0;
  double width = 0.0, height = 0.0;  // explicit sides, 0: margin rule
  int n_p = 0;                       // 0: explicit panel counts
  int panels_horizontal = 4, panels_vertical = 4;
  int order = 16;
};

struct SolverConfig {
  double gmres_tol = 1e-10;
  int max_iter = 500;
  int restart = 0;
  std::string transfer = "auto";  // auto | dense | matrix_free
};

struct GridConfig {
  double x1_lo = 0, x1_hi = 0, x2_lo = 0, x2_hi = 0;
  int n1 = 0, n2 = 0;
};

struct OutputConfig {
  std::optional<GridConfig> grid;
  std::vector<Vec2> probes;
  std::string prefix = "run";
};

struct SweepConfig {
  std::string parameter;  // k | d | a | none
  std::vector<double> values;
  std::vector<int> n_p;
  std::string reference = "monolithic";  // monolithic | refined
  double ka = 0.0;  // a-sweeps: k = ka / a when positive
};

struct RunConfig {
  MediumConfig medium;
  IncidentConfig incident;
  GeometryConfig geometry;
  ProxyConfig proxy;
  int n_gamma = 256;
  SolverConfig solver;
  OutputConfig output;
  int n_p_ref = 0;
  std::optional<SweepConfig> sweep;
  std::string solution;  // fieldgrid input
  std::string source_text;
};

/// JSON with comments; unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::vector<ShapeSpec> build_shapes(const RunConfig& cfg);
/// n_p_override > 0 replaces the configured proxy resolution.
std::vector<InclusionSpec> build_inclusions(const RunConfig& cfg, int n_p_override = 0);
KernelContext build_context(const RunConfig& cfg, const std::vector<InclusionSpec>& specs);
IncidentField build_incident(const RunConfig& cfg);
std::vector<Vec2> grid_points(const GridConfig& g);

}  // namespace proxyscat
