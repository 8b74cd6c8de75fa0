#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "oracles.hpp"
#include "proxyscat/commands.hpp"
#include "proxyscat/config.hpp"
#include "proxyscat/errors.hpp"

using namespace proxyscat;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDiskConfig = R"(// small disk
{
  "medium": {"kind": "free", "k": 3.0},
  "incident": {"kind": "plane", "theta": 0.0},
  "geometry": {"shapes": [{"kind": "ellipse", "a": 1.0, "b": 1.0}]},
  "proxy": {"width": 3.0, "height": 3.0, "n_p": 128, "order": 16},
  "discretization": {"n_gamma": 96},
  "solver": {"gmres_tol": 1e-12},
  "output": {"prefix": "disk", "probes": [[3.0, 0.5], [-2.0, 2.5]],
             "grid": {"x1": [-2.0, 2.0], "x2": [-2.0, 2.0], "n1": 5, "n2": 4}}
})";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("proxyscat_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PROXYSCAT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config parsing accepts comments and rejects unknown keys") {
    const RunConfig cfg = parse_config(kDiskConfig);
    CHECK(cfg.medium.k == 3.0);
    CHECK(cfg.geometry.shapes.size() == 1);
    CHECK(cfg.output.probes.size() == 2);
    REQUIRE(cfg.output.grid.has_value());
    CHECK(cfg.output.grid->n1 == 5);
    std::string bad = kDiskConfig;
    bad.replace(bad.find("\"gmres_tol\""), 11, "\"gmres_tolx\"");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    std::string lm = kDiskConfig;
    lm.replace(lm.find("\"plane\""), 7, "\"plane_lm\"");
    CHECK_THROWS_AS(parse_config(lm), ConfigError);
  }

  TEST_CASE("shipped fixtures parse") {
    for (const auto& e : fs::directory_iterator(PROXYSCAT_CONFIG_DIR)) {
      if (e.path().extension() != ".json") continue;
      CAPTURE(e.path().string());
      const RunConfig cfg = load_config(e.path());
      CHECK_FALSE(build_inclusions(cfg).empty());
    }
  }

  TEST_CASE("solve writes the report, solution and field files") {
    TempDir dir("solve");
    write(dir.path / "disk.json", kDiskConfig);
    const int rc = run_cli("solve --config " + (dir.path / "disk.json").string() + " --out-dir " +
                           dir.path.string());
    REQUIRE(rc == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "disk_report.json"));
    CHECK(report["status"] == "ok");
    CHECK(report["M"] == 1);
    CHECK(report["error_estimates"]["gmres_residual"].get<double>() < 1e-11);
    const std::string csv = slurp(dir.path / "disk_field.csv");
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "x1,x2,re_usc,im_usc,re_utot,im_utot,mask");
    int rows = 0;
    for (std::string l; std::getline(lines, l);) ++rows;
    CHECK(rows == 20);
    CHECK(fs::exists(dir.path / "disk.psol"));

    // Probe values against the separation-of-variables series.
    std::istringstream probes(slurp(dir.path / "disk_probes.csv"));
    std::getline(probes, header);
    int checked = 0;
    for (std::string l; std::getline(probes, l);) {
      std::replace(l.begin(), l.end(), ',', ' ');
      std::istringstream f(l);
      double x1, x2, re, im, rt, it;
      int mask;
      f >> x1 >> x2 >> re >> im >> rt >> it >> mask;
      if (mask != 0) continue;
      const cplx want = oracle::disk_scattered(3.0, 1.0, {x1, x2});
      CHECK(std::abs(cplx(re, im) - want) < 1e-9);
      ++checked;
    }
    CHECK(checked >= 2);

    // Re-evaluation from the stored solution reproduces the grid.
    const std::string fg = std::string(R"({"medium": {"kind": "free", "k": 3.0},
      "geometry": {"shapes": [{"kind": "ellipse", "a": 1.0, "b": 1.0}]},
      "fieldgrid": {"solution": "disk.psol"},
      "output": {"prefix": "again", "grid": {"x1": [-2.0, 2.0], "x2": [-2.0, 2.0], "n1": 5, "n2": 4}}})");
    write(dir.path / "fg.json", fg);
    REQUIRE(run_cli("fieldgrid --config " + (dir.path / "fg.json").string() + " --out-dir " +
                    dir.path.string()) == 0);
    CHECK(slurp(dir.path / "again_field.csv") == csv);

    // A finer grid through the same points agrees there.
    std::string fine = fg;
    fine.replace(fine.find("\"n1\": 5, \"n2\": 4"), 16, "\"n1\": 9, \"n2\": 7");
    fine.replace(fine.find("\"again\""), 7, "\"fine\"");
    write(dir.path / "fine.json", fine);
    REQUIRE(run_cli("fieldgrid --config " + (dir.path / "fine.json").string() + " --out-dir " +
                    dir.path.string()) == 0);
    const auto read_rows = [&](const fs::path& p) {
      std::vector<std::vector<double>> rows;
      std::istringstream in(slurp(p));
      std::string l;
      std::getline(in, l);
      while (std::getline(in, l)) {
        std::replace(l.begin(), l.end(), ',', ' ');
        std::istringstream f(l);
        std::vector<double> r(7);
        for (double& v : r) f >> v;
        rows.push_back(r);
      }
      return rows;
    };
    const auto coarse_rows = read_rows(dir.path / "again_field.csv");
    const auto fine_rows = read_rows(dir.path / "fine_field.csv");
    int shared = 0;
    for (const auto& c : coarse_rows)
      for (const auto& f : fine_rows)
        if (std::abs(c[0] - f[0]) < 1e-12 && std::abs(c[1] - f[1]) < 1e-12) {
          ++shared;
          for (int q = 2; q < 7; ++q) CHECK(std::abs(c[q] - f[q]) <= 1e-12);
        }
    CHECK(shared == 20);
  }

  TEST_CASE("scatmat writes a readable matrix") {
    TempDir dir("scatmat");
    write(dir.path / "disk.json", kDiskConfig);
    REQUIRE(run_cli("scatmat --config " + (dir.path / "disk.json").string() + " --out-dir " +
                    dir.path.string()) == 0);
    const ScatteringMatrix a = read_scattering_matrix(dir.path / "disk.pscm");
    CHECK(a.n_p == 128);
    CHECK(a.entries.rows() == 256);
    const auto report = nlohmann::json::parse(slurp(dir.path / "disk_report.json"));
    CHECK(report["n_p"] == 128);
    CHECK(report.contains("build_seconds"));
    CHECK(report["gamma_resolution"].get<double>() < 1e-12);
    const std::string first = slurp(dir.path / "disk.pscm");
    REQUIRE(run_cli("scatmat --config " + (dir.path / "disk.json").string() + " --out-dir " +
                    dir.path.string()) == 0);
    CHECK(slurp(dir.path / "disk.pscm") == first);
  }

  TEST_CASE("configuration errors exit with code 2 and an error report") {
    TempDir dir("bad");
    std::string bad = kDiskConfig;
    bad.replace(bad.find("\"k\": 3.0"), 8, "\"k\": -3.0");
    write(dir.path / "bad.json", bad);
    CHECK(run_cli("solve --config " + (dir.path / "bad.json").string() + " --out-dir " +
                  dir.path.string()) == 2);
    const auto report = nlohmann::json::parse(slurp(dir.path / "run_report.json"));
    CHECK(report["status"] == "error");

    std::string overlap = kDiskConfig;
    overlap.replace(overlap.find("[{\"kind\": \"ellipse\", \"a\": 1.0, \"b\": 1.0}]"), 40,
                    R"([{"kind": "ellipse", "a": 1.0, "b": 1.0}, {"kind": "ellipse", "a": 1.0, "b": 1.0, "center": [1.0, 0.0]}])");
    write(dir.path / "overlap.json", overlap);
    CHECK(run_cli("solve --config " + (dir.path / "overlap.json").string() + " --out-dir " +
                  dir.path.string()) == 2);
    CHECK(run_cli("solve --config " + (dir.path / "missing.json").string()) != 0);
    CHECK(run_cli("bogus") != 0);
  }
}
