#include "proxyscat/config.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>

#include <json.hpp>

#include "proxyscat/errors.hpp"
#include "proxyscat/io.hpp"
#include "proxyscat/layered.hpp"

namespace proxyscat {

namespace {

using json = nlohmann::json;

// Object reader that remembers which keys were consumed.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k);
  }
  const json& at(const std::string& k) {
    if (!has(k)) throw ConfigError(where_ + ": missing key '" + k + "'");
    return j_.at(k);
  }
  std::string path(const std::string& k) const { return where_ + "." + k; }

  double num(const std::string& k, std::optional<double> def = std::nullopt) {
    if (!has(k)) {
      if (def) return *def;
      throw ConfigError(where_ + ": missing key '" + k + "'");
    }
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(path(k) + ": expected a number");
    return v.get<double>();
  }
  int integer(const std::string& k, std::optional<int> def = std::nullopt) {
    if (!has(k)) {
      if (def) return *def;
      throw ConfigError(where_ + ": missing key '" + k + "'");
    }
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(path(k) + ": expected an integer");
    return v.get<int>();
  }
  std::string str(const std::string& k, std::optional<std::string> def = std::nullopt) {
    if (!has(k)) {
      if (def) return *def;
      throw ConfigError(where_ + ": missing key '" + k + "'");
    }
    const json& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(path(k) + ": expected a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(path(k) + ": expected true or false");
    return v.get<bool>();
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Vec2 as_vec2(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(where + ": expected [x1, x2]");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<double> as_numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive");
}

ShapeSpec parse_shape(const json& j, const std::string& where) {
  Obj o(j, where);
  const std::string kind = o.str("kind");
  const double a = o.num("a"), b = o.num("b");
  const Vec2 c = o.has("center") ? as_vec2(o.at("center"), o.path("center")) : Vec2{};
  ShapeSpec s;
  if (kind == "ellipse") {
    s = ellipse(a, b, c);
  } else if (kind == "star_ellipse") {
    s = star_ellipse(a, b, c, o.num("star_amplitude", 0.1), o.integer("star_frequency", 7));
  } else {
    throw ConfigError(o.path("kind") + ": unknown shape kind '" + kind + "'");
  }
  s.validate();
  return s;
}

void parse_medium(const json& j, MediumConfig& m) {
  Obj o(j, "medium");
  const std::string kind = o.str("kind");
  if (kind == "free") {
    m.layered = false;
    m.k = o.num("k");
    positive(m.k, "medium.k");
  } else if (kind == "layered") {
    m.layered = true;
    m.k_plus = o.num("k_plus");
    m.k_minus = o.num("k_minus");
    positive(m.k_plus, "medium.k_plus");
    positive(m.k_minus, "medium.k_minus");
    m.k = m.k_plus;
    m.delta = o.num("delta", 0.0);
    m.extent = o.num("horizontal_extent", 0.0);
    m.height = o.num("height", 0.0);
    m.sommerfeld_tol = o.num("sommerfeld_tol", 1e-10);
    if (m.delta < 0.0 || m.extent < 0.0 || m.height < 0.0)
      throw ConfigError("medium: delta, horizontal_extent and height must be non-negative");
    if (!(m.sommerfeld_tol > 0.0 && m.sommerfeld_tol < 1.0))
      throw ConfigError("medium.sommerfeld_tol must lie in (0, 1)");
  } else {
    throw ConfigError("medium.kind: expected 'free' or 'layered'");
  }
}

void parse_incident(const json& j, IncidentConfig& inc) {
  Obj o(j, "incident");
  inc.kind = o.str("kind");
  if (inc.kind == "plane" || inc.kind == "plane_lm") {
    inc.theta = o.num("theta", inc.kind == "plane" ? 0.0 : 3.14159265358979323846 / 3.0);
  } else if (inc.kind == "point_source") {
    inc.source = as_vec2(o.at("source"), "incident.source");
  } else {
    throw ConfigError("incident.kind: expected plane, point_source or plane_lm");
  }
}

void parse_geometry(const json& j, GeometryConfig& g) {
  Obj o(j, "geometry");
  if (o.has("shapes")) {
    const json& arr = o.at("shapes");
    if (!arr.is_array() || arr.empty()) throw ConfigError("geometry.shapes: expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      g.shapes.push_back(parse_shape(arr[i], "geometry.shapes[" + std::to_string(i) + "]"));
  }
  if (o.has("generator")) {
    if (!g.shapes.empty()) throw ConfigError("geometry: give either shapes or a generator");
    Obj gen(o.at("generator"), "geometry.generator");
    g.generator = gen.str("name");
    if (g.generator == "photonic") {
      g.photonic.columns = gen.integer("columns", 41);
      g.photonic.rows = gen.integer("rows", 21);
      g.photonic.remove_channel = gen.boolean("remove_channel", true);
      if (g.photonic.columns < 1 || g.photonic.columns > 41 || g.photonic.rows < 1 ||
          g.photonic.rows > 21)
        throw ConfigError("geometry.generator: photonic columns/rows out of range");
    } else if (g.generator == "layered_array") {
      const int seed = gen.integer("seed", 1);
      if (seed < 0) throw ConfigError("geometry.generator.seed must be non-negative");
      g.layered_array.seed = static_cast<std::uint64_t>(seed);
      g.layered_array.amplitude = gen.num("amplitude", 0.1);
      g.layered_array.per_row = gen.integer("per_row", 0);
      const std::string rule = gen.str("center_rule", "printed");
      if (rule == "printed")
        g.layered_array.rule = CenterRule::printed;
      else if (rule == "spaced")
        g.layered_array.rule = CenterRule::spaced;
      else
        throw ConfigError("geometry.generator.center_rule: expected printed or spaced");
      if (g.layered_array.amplitude < 0.0 || g.layered_array.per_row < 0)
        throw ConfigError("geometry.generator: amplitude and per_row must be non-negative");
    } else if (g.generator == "two_ellipse") {
      g.ellipse_a = gen.num("a", 4.0);
      g.separation = gen.num("d", 1.0);
      g.base_height = gen.num("base_height", 0.0);
      positive(g.ellipse_a, "geometry.generator.a");
      positive(g.separation, "geometry.generator.d");
    } else {
      throw ConfigError("geometry.generator.name: unknown generator '" + g.generator + "'");
    }
  }
  if (g.shapes.empty() && g.generator.empty())
    throw ConfigError("geometry: need shapes or a generator");
}

void parse_proxy(const json& j, ProxyConfig& p) {
  Obj o(j, "proxy");
  if (o.has("margin")) {
    const json& m = o.at("margin");
    if (m.is_string()) {
      if (m.get<std::string>() != "equal_gap")
        throw ConfigError("proxy.margin: expected a number or \"equal_gap\"");
      p.equal_gap = true;
    } else if (m.is_number()) {
      p.equal_gap = false;
      p.margin = m.get<double>();
      positive(p.margin, "proxy.margin");
    } else {
      throw ConfigError("proxy.margin: expected a number or \"equal_gap\"");
    }
  }
  p.width = o.num("width", 0.0);
  p.height = o.num("height", 0.0);
  if ((p.width > 0.0) != (p.height > 0.0) || p.width < 0.0 || p.height < 0.0)
    throw ConfigError("proxy: width and height must be given together and be positive");
  p.order = o.integer("order", 16);
  p.n_p = o.integer("n_p", 0);
  p.panels_horizontal = o.integer("panels_horizontal", 4);
  p.panels_vertical = o.integer("panels_vertical", 4);
  if (p.n_p < 0) throw ConfigError("proxy.n_p must be non-negative");
  if (p.order < 4 || p.order > 32) throw ConfigError("proxy.order must lie in [4, 32]");
}

void parse_solver(const json& j, SolverConfig& s) {
  Obj o(j, "solver");
  s.gmres_tol = o.num("gmres_tol", 1e-10);
  s.max_iter = o.integer("max_iter", 500);
  s.restart = o.integer("restart", 0);
  s.transfer = o.str("transfer", "auto");
  positive(s.gmres_tol, "solver.gmres_tol");
  if (s.max_iter < 1 || s.restart < 0) throw ConfigError("solver: bad max_iter or restart");
  if (s.transfer != "auto" && s.transfer != "dense" && s.transfer != "matrix_free")
    throw ConfigError("solver.transfer: expected auto, dense or matrix_free");
}

void parse_output(const json& j, OutputConfig& out) {
  Obj o(j, "output");
  out.prefix = o.str("prefix", "run");
  if (out.prefix.empty() || out.prefix.find('/') != std::string::npos)
    throw ConfigError("output.prefix must be a plain file stem");
  if (o.has("grid")) {
    Obj g(o.at("grid"), "output.grid");
    GridConfig gc;
    const auto x1 = as_numbers(g.at("x1"), "output.grid.x1");
    const auto x2 = as_numbers(g.at("x2"), "output.grid.x2");
    if (x1.size() != 2 || x2.size() != 2) throw ConfigError("output.grid: ranges are [lo, hi]");
    gc.x1_lo = x1[0];
    gc.x1_hi = x1[1];
    gc.x2_lo = x2[0];
    gc.x2_hi = x2[1];
    gc.n1 = g.integer("n1");
    gc.n2 = g.integer("n2");
    if (gc.n1 < 1 || gc.n2 < 1 || gc.x1_hi < gc.x1_lo || gc.x2_hi < gc.x2_lo)
      throw ConfigError("output.grid: bad bounds or resolution");
    out.grid = gc;
  }
  if (o.has("probes")) {
    const json& arr = o.at("probes");
    if (!arr.is_array()) throw ConfigError("output.probes: expected an array of points");
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.probes.push_back(as_vec2(arr[i], "output.probes[" + std::to_string(i) + "]"));
  }
}

void parse_sweep(const json& j, SweepConfig& s) {
  Obj o(j, "sweep");
  s.parameter = o.str("parameter", "none");
  if (s.parameter != "k" && s.parameter != "d" && s.parameter != "a" && s.parameter != "none")
    throw ConfigError("sweep.parameter: expected k, d, a or none");
  if (o.has("values")) s.values = as_numbers(o.at("values"), "sweep.values");
  if (s.parameter != "none" && s.values.empty()) throw ConfigError("sweep.values: empty");
  for (double v : s.values) positive(v, "sweep.values entries");
  const json& np = o.at("n_p");
  if (!np.is_array() || np.empty()) throw ConfigError("sweep.n_p: expected a non-empty array");
  for (const auto& e : np) {
    if (!e.is_number_integer() || e.get<int>() <= 0)
      throw ConfigError("sweep.n_p: expected positive integers");
    s.n_p.push_back(e.get<int>());
  }
  s.reference = o.str("reference", "monolithic");
  if (s.reference != "monolithic" && s.reference != "refined")
    throw ConfigError("sweep.reference: expected monolithic or refined");
  s.ka = o.num("ka", 0.0);
}

double proxy_bottom(const RectProxySpec& p) { return p.center.x2 - 0.5 * p.height; }

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  cfg.source_text = text;
  Obj o(root, "config");
  parse_medium(o.at("medium"), cfg.medium);
  if (o.has("incident")) {
    parse_incident(o.at("incident"), cfg.incident);
  } else if (cfg.medium.layered) {
    cfg.incident.kind = "plane_lm";
    cfg.incident.theta = 3.14159265358979323846 / 3.0;
  }
  if (cfg.medium.layered != (cfg.incident.kind == "plane_lm"))
    throw ConfigError("incident: plane_lm is required for (and only valid in) a layered medium");
  parse_geometry(o.at("geometry"), cfg.geometry);
  if (o.has("proxy")) parse_proxy(o.at("proxy"), cfg.proxy);
  if (o.has("discretization")) {
    Obj d(o.at("discretization"), "discretization");
    cfg.n_gamma = d.integer("n_gamma", 256);
    if (d.has("n_p")) cfg.proxy.n_p = d.integer("n_p");
  }
  if (cfg.n_gamma < 16 || cfg.n_gamma % 2 != 0)
    throw ConfigError("discretization.n_gamma must be even and at least 16");
  if (o.has("solver")) parse_solver(o.at("solver"), cfg.solver);
  if (o.has("output")) parse_output(o.at("output"), cfg.output);
  if (o.has("reference")) {
    Obj r(o.at("reference"), "reference");
    cfg.n_p_ref = r.integer("n_p_ref", 0);
    if (cfg.n_p_ref < 0) throw ConfigError("reference.n_p_ref must be non-negative");
  }
  if (o.has("sweep")) {
    SweepConfig s;
    parse_sweep(o.at("sweep"), s);
    cfg.sweep = s;
  }
  if (o.has("fieldgrid")) {
    Obj f(o.at("fieldgrid"), "fieldgrid");
    cfg.solution = f.str("solution");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::vector<ShapeSpec> build_shapes(const RunConfig& cfg) {
  const auto& g = cfg.geometry;
  if (g.generator.empty()) return g.shapes;
  if (g.generator == "photonic") return photonic_lattice(g.photonic);
  if (g.generator == "layered_array") return layered_array(g.layered_array);
  const double lo = g.base_height;
  return {ellipse(0.5 * g.ellipse_a, 0.5, {0.0, lo}),
          ellipse(0.5 * g.ellipse_a, 0.5, {0.0, lo + 1.0 + g.separation})};
}

std::vector<InclusionSpec> build_inclusions(const RunConfig& cfg, int n_p_override) {
  const auto shapes = build_shapes(cfg);
  const auto& p = cfg.proxy;
  double margin = p.margin;
  if (p.width <= 0.0) {
    if (cfg.geometry.generator == "two_ellipse" && p.equal_gap)
      margin = cfg.geometry.separation / 3.0;
    else if (p.equal_gap)
      margin = shapes.size() > 1 ? equal_gap_margin(shapes) : 0.5;
  }
  const int n_p = n_p_override > 0 ? n_p_override : p.n_p;
  std::vector<InclusionSpec> specs;
  std::vector<RectProxySpec> rects;
  for (const auto& s : shapes) {
    InclusionSpec in;
    in.shape = s;
    in.n_gamma = cfg.n_gamma;
    if (p.width > 0.0) {
      in.proxy.center = s.center;
      in.proxy.width = p.width;
      in.proxy.height = p.height;
      in.proxy.panel_order = p.order;
      if (n_p > 0) {
        const auto [ph, pv] = split_panels(p.width, p.height, n_p, p.order);
        in.proxy.panels_horizontal = ph;
        in.proxy.panels_vertical = pv;
      } else {
        in.proxy.panels_horizontal = p.panels_horizontal;
        in.proxy.panels_vertical = p.panels_vertical;
      }
      in.proxy.validate();
    } else if (n_p > 0) {
      in.proxy = proxy_with_points(s, margin, n_p, p.order);
    } else {
      in.proxy = proxy_for(s, margin, p.panels_horizontal, p.panels_vertical, p.order);
    }
    rects.push_back(in.proxy);
    specs.push_back(in);
  }
  check_proxies_disjoint(rects);
  if (cfg.medium.layered) {
    for (const auto& r : rects)
      if (proxy_bottom(r) <= 0.0)
        throw ConfigError("geometry crosses the interface: every proxy must lie in x2 > 0");
  }
  return specs;
}

KernelContext build_context(const RunConfig& cfg, const std::vector<InclusionSpec>& specs) {
  const auto& m = cfg.medium;
  if (!m.layered) return KernelContext::free_space(m.k);
  double lo = std::numeric_limits<double>::infinity(), top = 0.0;
  double left = lo, right = -lo;
  for (const auto& s : specs) {
    lo = std::min(lo, proxy_bottom(s.proxy));
    top = std::max(top, s.proxy.center.x2 + 0.5 * s.proxy.height);
    left = std::min(left, s.proxy.center.x1 - 0.5 * s.proxy.width);
    right = std::max(right, s.proxy.center.x1 + 0.5 * s.proxy.width);
  }
  SommerfeldParams sp;
  sp.k_plus = m.k_plus;
  sp.k_minus = m.k_minus;
  sp.delta = m.delta > 0.0 ? m.delta : lo;
  if (sp.delta > lo * (1.0 + 1e-12))
    throw ConfigError("medium.delta exceeds the lowest proxy edge");
  sp.extent = m.extent > 0.0 ? m.extent : 0.5 * (right - left);
  sp.height = m.height > 0.0 ? m.height : top;
  sp.tol = m.sommerfeld_tol;
  auto medium = std::make_shared<LayeredMedium>(m.k_plus, m.k_minus, build_sommerfeld_rule(sp));
  return KernelContext::layered_medium(std::move(medium));
}

IncidentField build_incident(const RunConfig& cfg) {
  const auto& i = cfg.incident;
  if (i.kind == "plane") return IncidentField::plane(cfg.medium.k, i.theta);
  if (i.kind == "point_source") return IncidentField::point_source(cfg.medium.k, i.source);
  return layered_incident(i.theta, cfg.medium.k_plus, cfg.medium.k_minus);
}

std::vector<Vec2> grid_points(const GridConfig& g) {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(g.n1) * g.n2);
  for (int j = 0; j < g.n2; ++j) {
    const double x2 = g.n2 == 1 ? g.x2_lo : g.x2_lo + (g.x2_hi - g.x2_lo) * j / (g.n2 - 1);
    for (int i = 0; i < g.n1; ++i) {
      const double x1 = g.n1 == 1 ? g.x1_lo : g.x1_lo + (g.x1_hi - g.x1_lo) * i / (g.n1 - 1);
      pts.push_back({x1, x2});
    }
  }
  return pts;
}

}  // namespace proxyscat
