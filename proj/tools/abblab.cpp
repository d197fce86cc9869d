// abblab: config-driven experiment runner.
//
//   abblab <kind> --config <file> [--out dir] [--seed N] [--threads N]
//
// kind is one of phase_scan, speed_fit, crossval, cdf_check, certify.
// Exit code 0 on a passing run, 1 on a completed-but-failing run, 2 on
// config or construction errors.
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "abb/experiments.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

int main(int argc, char** argv) {
  CLI::App app{"accelerated branching-motion voting lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  long long seed = -1;
  int threads = 0;

  const char* kinds[] = {"phase_scan", "speed_fit", "crossval", "cdf_check", "certify"};
  for (const char* k : kinds) {
    CLI::App* sub = app.add_subcommand(k);
    sub->add_option("--config", config_path, "sectioned key-value config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--seed", seed, "override mc.seed from the config");
    sub->add_option("--threads", threads, "worker threads for the solver/simulator kernels");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);   // prints the message / help text
    return rc == 0 ? 0 : 2;  // collapse usage errors into the config-error code
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    abb::ConfigMap cfg = abb::ConfigMap::parse_file(config_path);
    if (seed >= 0) cfg.kv["mc.seed"] = std::to_string(seed);
    const std::string kind = app.get_subcommands().front()->get_name();
    abb::RunResult rr = abb::run_experiment(kind, cfg, out_dir);
    std::printf("%s: %s (%.2fs) -> %s/summary.json\n", kind.c_str(),
                rr.pass ? "pass" : "FAIL", rr.summary["wall_seconds"].get<double>(),
                out_dir.c_str());
    return rr.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "abblab: %s\n", e.what());
    return 2;
  }
}
