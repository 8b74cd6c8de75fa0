#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "proxyscat/commands.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

int thread_count(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("PROXYSCAT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "proxyscat: ignoring invalid PROXYSCAT_THREADS='" << env << "'\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proxy-surface scattering matrices and multi-particle Helmholtz solves"};
  app.require_subcommand(1, 1);
  std::string config;
  std::string out_dir = ".";
  int threads = 0;
  const char* names[] = {"scatmat", "solve", "convergence", "fieldgrid"};
  const char* help[] = {"build one scattering matrix and write it as a .pscm file",
                        "solve a multi-particle problem and export fields",
                        "sweep proxy resolution against a reference solution",
                        "evaluate a stored solution on a grid"};
  for (int i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config, "config file (JSON, comments allowed)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (default: PROXYSCAT_THREADS)")
        ->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
#ifdef _OPENMP
  if (const int n = thread_count(threads); n > 0) omp_set_num_threads(n);
#else
  (void)thread_count(threads);
#endif
  const std::string command = app.get_subcommands().front()->get_name();
  return proxyscat::run_command(command, config, out_dir);
}
