#include "proxyscat/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "proxyscat/errors.hpp"
#include "proxyscat/io.hpp"
#include "proxyscat/layered.hpp"

namespace proxyscat {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

TransferOperator::Mode parse_mode(const std::string& s, bool& automatic) {
  automatic = s == "auto";
  return s == "dense" ? TransferOperator::Mode::dense_cached : TransferOperator::Mode::matrix_free;
}

json config_echo(const RunConfig& cfg) {
  try {
    return json::parse(cfg.source_text, nullptr, true, true);
  } catch (const std::exception&) {
    return cfg.source_text;
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Fraction of the density carried by the top eighth of its Fourier modes.
double resolution_estimate(const CVector& sigma) {
  const Eigen::Index n = sigma.size();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> mag(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    cplx s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      s += sigma(j) * std::polar(1.0, -two_pi * static_cast<double>(m * j % n) / n);
    mag[m] = std::abs(s);
  }
  double top = 0.0, tail = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    const Eigen::Index freq = std::min(m, n - m);
    top = std::max(top, mag[m]);
    if (freq >= n / 2 - n / 16) tail = std::max(tail, mag[m]);
  }
  return top > 0.0 ? tail / top : 0.0;
}

std::vector<CVector> sample_on(const IncidentField& f, const std::vector<DiscretizedCurve>& curves) {
  std::vector<CVector> out;
  for (const auto& c : curves) {
    CVector v(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) v(j) = f.value(c.nodes[j]);
    out.push_back(std::move(v));
  }
  return out;
}

void write_error_report(const std::filesystem::path& out_dir, const std::string& prefix,
                        const std::string& command, const std::string& kind,
                        const std::string& message) {
  json r;
  r["status"] = "error";
  r["command"] = command;
  r["error"] = {{"kind", kind}, {"message", message}};
  try {
    write_file_atomic(out_dir / (prefix + "_report.json"), r.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "proxyscat: cannot write error report: " << e.what() << "\n";
  }
}

}  // namespace

ScatmatOutcome run_scatmat(const RunConfig& cfg) {
  const auto specs = build_inclusions(cfg);
  const KernelContext ctx = build_context(cfg, {specs.front()});
  const auto t0 = Clock::now();
  const InclusionSpec& s = specs.front();
  const DiscretizedCurve gamma = discretize_scatterer(s.shape, s.n_gamma);
  const DiscretizedCurve proxy = discretize_proxy(s.proxy);
  ScatmatOutcome out;
  out.a = build_scattering_matrix(gamma, proxy, ctx);
  out.a.key = inclusion_key(s, ctx);
  out.seconds = since(t0);
  const IncidentField probe = ctx.is_layered()
                                  ? layered_incident(0.5 * std::numbers::pi, cfg.medium.k_plus,
                                                     cfg.medium.k_minus)
                                  : IncidentField::plane(ctx.k, 0.0);
  const CVector sigma = solve_combined_field(gamma, ctx, sample_on(probe, {gamma}).front());
  out.gamma_resolution = resolution_estimate(sigma);
  return out;
}

std::vector<Vec2> default_probes(const MultiSystem& sys) {
  double lo1 = 1e300, hi1 = -1e300, lo2 = 1e300, hi2 = -1e300;
  for (const auto& inc : sys.inclusions) {
    const auto& p = inc.spec.proxy;
    lo1 = std::min(lo1, p.center.x1 - 0.5 * p.width);
    hi1 = std::max(hi1, p.center.x1 + 0.5 * p.width);
    lo2 = std::min(lo2, p.center.x2 - 0.5 * p.height);
    hi2 = std::max(hi2, p.center.x2 + 0.5 * p.height);
  }
  const double lambda = 2.0 * std::numbers::pi / sys.ctx.k;
  const double c1 = 0.5 * (lo1 + hi1), c2 = 0.5 * (lo2 + hi2);
  // sqrt(2) scaling makes the ellipse pass outside the box corners.
  const double r1 = std::sqrt(2.0) * (0.5 * (hi1 - lo1) + lambda);
  const double r2 = std::sqrt(2.0) * (0.5 * (hi2 - lo2) + lambda);
  std::vector<Vec2> pts;
  const int ring = 48;
  for (int t = 0; t < ring; ++t) {
    const double th = 2.0 * std::numbers::pi * (t + 0.5) / ring;
    const Vec2 p{c1 + r1 * std::cos(th), c2 + r2 * std::sin(th)};
    if (sys.ctx.is_layered() && std::abs(p.x2) < 1e-3) continue;
    pts.push_back(p);
  }
  return pts;
}

double probe_difference(const SolveOutcome& coarse, const SolveOutcome& fine,
                        const std::vector<Vec2>& probes) {
  const FieldSample a = eval_representation(coarse.sol, coarse.sys, probes);
  const FieldSample b = eval_representation(fine.sol, fine.sys, probes);
  const double scale = b.u.cwiseAbs().maxCoeff();
  return (a.u - b.u).cwiseAbs().maxCoeff() / scale;
}

SolveOutcome run_solve(const RunConfig& cfg, int n_p_override, bool with_diagnostics) {
  SolveOutcome out;
  auto t0 = Clock::now();
  out.specs = build_inclusions(cfg, n_p_override);
  out.n_p = static_cast<int>(out.specs.front().proxy.n_points());
  const KernelContext ctx = build_context(cfg, out.specs);
  const IncidentField inc = build_incident(cfg);
  out.seconds["setup"] = since(t0);

  t0 = Clock::now();
  ScatteringMatrixCache cache;
  SystemOptions so;
  so.mode = parse_mode(cfg.solver.transfer, so.auto_mode);
  out.sys = make_system(out.specs, ctx, inc, cache, so);
  out.seconds["build"] = since(t0);

  SolveOptions opt;
  opt.tol = cfg.solver.gmres_tol;
  opt.max_iter = cfg.solver.max_iter;
  opt.restart = cfg.solver.restart;
  t0 = Clock::now();
  out.sol = solve(out.sys, opt);
  out.seconds["solve"] = since(t0);

  if (!with_diagnostics) return out;
  t0 = Clock::now();
  out.dirichlet = dirichlet_residual(out.sol, out.sys);
  out.seconds["dirichlet"] = since(t0);
  out.probes = cfg.output.probes.empty() ? default_probes(out.sys) : cfg.output.probes;
  if (cfg.n_p_ref > 0) {
    t0 = Clock::now();
    const SolveOutcome ref = run_solve(cfg, cfg.n_p_ref, false);
    out.self_convergence = probe_difference(out, ref, out.probes);
    out.seconds["reference"] = since(t0);
  }
  return out;
}

RunConfig with_sweep_value(const RunConfig& cfg, const std::string& parameter, double value) {
  RunConfig c = cfg;
  if (parameter == "k") {
    if (c.medium.layered) {
      c.medium.k_minus *= value / c.medium.k_plus;
      c.medium.k_plus = value;
    }
    c.medium.k = value;
  } else if (parameter == "d") {
    if (c.geometry.generator != "two_ellipse")
      throw ConfigError("sweep over d needs the two_ellipse generator");
    c.geometry.separation = value;
  } else if (parameter == "a") {
    if (c.geometry.generator != "two_ellipse")
      throw ConfigError("sweep over a needs the two_ellipse generator");
    c.geometry.ellipse_a = value;
    if (c.sweep && c.sweep->ka > 0.0) {
      const double k = c.sweep->ka / value;
      if (c.medium.layered) {
        c.medium.k_minus *= k / c.medium.k_plus;
        c.medium.k_plus = k;
      }
      c.medium.k = k;
    }
  }
  return c;
}

std::vector<ConvergenceRow> run_convergence(const RunConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("convergence needs a sweep block");
  const SweepConfig& sw = *cfg.sweep;
  std::vector<double> values = sw.values;
  if (sw.parameter == "none") values = {0.0};
  std::vector<ConvergenceRow> rows;
  for (double v : values) {
    const RunConfig c = sw.parameter == "none" ? cfg : with_sweep_value(cfg, sw.parameter, v);
    if (sw.reference == "monolithic") {
      const auto specs = build_inclusions(c, sw.n_p.front());
      const KernelContext ctx = build_context(c, specs);
      const IncidentField inc = build_incident(c);
      std::vector<DiscretizedCurve> curves;
      for (const auto& s : specs) curves.push_back(discretize_scatterer(s.shape, s.n_gamma));
      const MonolithicSolution mono = solve_monolithic(curves, ctx, sample_on(inc, curves));
      ScatteringMatrixCache cache;
      for (int np : sw.n_p) {
        const auto sp = build_inclusions(c, np);
        MultiSystem sys = make_system(sp, ctx, inc, cache);
        SolveOptions opt;
        opt.tol = c.solver.gmres_tol;
        opt.max_iter = c.solver.max_iter;
        const MultiSolution sol = solve(sys, opt);
        const BoundaryState x = unscale(sol.x, sys.transfer->proxies());
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < sys.inclusions.size(); ++i) {
          const auto& p = sys.inclusions[i].proxy;
          const FieldSample ref = eval_monolithic(curves, mono, p.nodes, {}, ctx);
          const auto u = x.block(i).head(p.size());
          err = std::max(err, (u - ref.u).cwiseAbs().maxCoeff());
          scale = std::max(scale, ref.u.cwiseAbs().maxCoeff());
        }
        rows.push_back({v, static_cast<int>(sp.front().proxy.n_points()), err / scale});
      }
    } else {
      if (c.n_p_ref <= 0) throw ConfigError("refined reference needs reference.n_p_ref");
      const SolveOutcome ref = run_solve(c, c.n_p_ref, false);
      const auto probes = c.output.probes.empty() ? default_probes(ref.sys) : c.output.probes;
      for (int np : sw.n_p) {
        const SolveOutcome s = run_solve(c, np, false);
        rows.push_back({v, s.n_p, probe_difference(s, ref, probes)});
      }
    }
  }
  return rows;
}

void write_solution(const std::filesystem::path& path, const RunConfig& cfg, int n_p,
                    const MultiSolution& sol) {
  ByteWriter w;
  w.raw("PSOL", 4);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(n_p));
  w.u32(static_cast<std::uint32_t>(sol.x.blocks()));
  for (std::size_t i = 0; i < sol.x.blocks(); ++i)
    w.u32(static_cast<std::uint32_t>(sol.x.block_size(i)));
  w.u32(static_cast<std::uint32_t>(cfg.source_text.size()));
  w.raw(cfg.source_text.data(), cfg.source_text.size());
  for (Eigen::Index j = 0; j < sol.x.data.size(); ++j) {
    w.f64(sol.x.data(j).real());
    w.f64(sol.x.data(j).imag());
  }
  write_file_atomic(path, w.str());
}

StoredSolution read_solution(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  ByteReader r(data);
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "PSOL") throw Error(path.string() + ": not a solution file");
  if (r.u32() != 1) throw Error(path.string() + ": unsupported solution version");
  StoredSolution s;
  s.n_p = static_cast<int>(r.u32());
  const std::uint32_t m = r.u32();
  s.x.offsets.assign(1, 0);
  for (std::uint32_t i = 0; i < m; ++i) s.x.offsets.push_back(s.x.offsets.back() + r.u32());
  const std::uint32_t len = r.u32();
  if (r.remaining() < len) throw Error(path.string() + ": truncated solution file");
  s.config_text.resize(len);
  r.raw(s.config_text.data(), len);
  const Eigen::Index n = s.x.offsets.back();
  if (r.remaining() != static_cast<std::size_t>(n) * 16)
    throw Error(path.string() + ": solution payload size mismatch");
  s.x.data.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double re = r.f64();
    const double im = r.f64();
    s.x.data(j) = {re, im};
  }
  s.x.scaled = true;
  return s;
}

std::string field_csv(const FieldGrid& g) {
  std::ostringstream os;
  os << "x1,x2,re_usc,im_usc,re_utot,im_utot,mask\n";
  for (std::size_t t = 0; t < g.points.size(); ++t) {
    os << fmt(g.points[t].x1) << ',' << fmt(g.points[t].x2) << ',' << fmt(g.u_sc(t).real()) << ','
       << fmt(g.u_sc(t).imag()) << ',' << fmt(g.u_tot(t).real()) << ',' << fmt(g.u_tot(t).imag())
       << ',' << g.mask[t] << '\n';
  }
  return os.str();
}

int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::filesystem::path& out_dir) {
  std::string prefix = "run";
  try {
    const RunConfig cfg = load_config(config_path);
    prefix = cfg.output.prefix;
    json report;
    report["command"] = command;
    report["config"] = config_echo(cfg);
    const auto t_all = Clock::now();

    if (command == "scatmat") {
      const ScatmatOutcome s = run_scatmat(cfg);
      const auto file = out_dir / (prefix + ".pscm");
      write_scattering_matrix(file, s.a);
      report["n_p"] = s.a.n_p;
      report["n_gamma"] = cfg.n_gamma;
      report["build_seconds"] = s.seconds;
      report["gamma_resolution"] = s.gamma_resolution;
      report["file"] = file.string();
    } else if (command == "solve") {
      const SolveOutcome s = run_solve(cfg);
      write_solution(out_dir / (prefix + ".psol"), cfg, s.n_p, s.sol);
      if (cfg.output.grid) {
        const FieldGrid g = eval_field(s.sol, s.sys, grid_points(*cfg.output.grid));
        write_file_atomic(out_dir / (prefix + "_field.csv"), field_csv(g));
      }
      const FieldGrid pg = eval_field(s.sol, s.sys, s.probes);
      write_file_atomic(out_dir / (prefix + "_probes.csv"), field_csv(pg));
      std::size_t n_tot = 0;
      for (const auto& inc : s.sys.inclusions) n_tot += inc.proxy.size();
      report["M"] = s.sys.inclusions.size();
      report["n_p"] = s.n_p;
      report["N_tot"] = n_tot;
      report["transfer_mode"] =
          s.sys.transfer->mode() == TransferOperator::Mode::dense_cached ? "dense" : "matrix_free";
      report["iterations"] = s.sol.report.iterations;
      report["residual_history"] = s.sol.report.history;
      report["seconds"] = s.seconds;
      json est;
      est["gmres_residual"] = s.sol.report.residual;
      est["dirichlet_residual"] = s.dirichlet;
      if (s.self_convergence >= 0.0) {
        est["self_convergence"] = s.self_convergence;
        est["n_p_ref"] = cfg.n_p_ref;
      }
      report["error_estimates"] = est;
      if (s.sol.report.residual > 10.0 * cfg.solver.gmres_tol)
        throw ConvergenceError("solver residual above tolerance", s.sol.report.history);
    } else if (command == "convergence") {
      const auto rows = run_convergence(cfg);
      std::ostringstream os;
      os << "sweep_value,n_p,eps_a\n";
      json jr = json::array();
      for (const auto& r : rows) {
        os << fmt(r.value) << ',' << r.n_p << ',' << fmt(r.eps_a) << '\n';
        jr.push_back({{"value", r.value}, {"n_p", r.n_p}, {"eps_a", r.eps_a}});
      }
      write_file_atomic(out_dir / (prefix + "_convergence.csv"), os.str());
      report["rows"] = jr;
    } else if (command == "fieldgrid") {
      if (cfg.solution.empty()) throw ConfigError("fieldgrid needs fieldgrid.solution");
      if (!cfg.output.grid) throw ConfigError("fieldgrid needs output.grid");
      std::filesystem::path sol_path = cfg.solution;
      if (sol_path.is_relative()) sol_path = config_path.parent_path() / sol_path;
      const StoredSolution stored = read_solution(sol_path);
      const RunConfig solved = parse_config(stored.config_text);
      const auto specs = build_inclusions(solved, stored.n_p);
      const KernelContext ctx = build_context(solved, specs);
      ScatteringMatrixCache cache;
      const MultiSystem sys = make_system(specs, ctx, build_incident(solved), cache);
      if (sys.transfer->offsets() != stored.x.offsets)
        throw Error("fieldgrid: stored solution does not match its configuration");
      MultiSolution sol;
      sol.x = stored.x;
      const FieldGrid g = eval_field(sol, sys, grid_points(*cfg.output.grid));
      write_file_atomic(out_dir / (prefix + "_field.csv"), field_csv(g));
      report["points"] = g.points.size();
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
    report["total_seconds"] = since(t_all);
    report["status"] = "ok";
    write_file_atomic(out_dir / (prefix + "_report.json"), report.dump(2) + "\n");
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "proxyscat: " << e.what() << "\n";
    write_error_report(out_dir, prefix, command, e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    std::cerr << "proxyscat: " << e.what() << "\n";
    write_error_report(out_dir, prefix, command, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "proxyscat: " << e.what() << "\n";
    write_error_report(out_dir, prefix, command, "internal_error", e.what());
    return 1;
  }
}

}  // namespace proxyscat
