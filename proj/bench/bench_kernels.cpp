// Wall-clock comparison of the OpenMP kernels against their serial
// references: the explicit nonlocal stepper and the trial batch runner.
// Usage: bench_kernels [pde_nodes] [pde_steps] [mc_trials]
#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "abb/nonlinearity.hpp"
#include "abb/particle_sim.hpp"
#include "abb/pde.hpp"
#include "abb/voting_rule.hpp"

using namespace abb;
using clock_type = std::chrono::steady_clock;

namespace {

template <class Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = clock_type::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(clock_type::now() - t0).count());
  }
  return best;
}

double sink = 0.0;  // defeats dead-code elimination across reps

}  // namespace

int main(int argc, char** argv) {
  const int nodes = argc > 1 ? std::atoi(argv[1]) : 20001;
  const int steps = argc > 2 ? std::atoi(argv[2]) : 2000;
  const long long trials = argc > 3 ? std::atoll(argv[3]) : 2000;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial [s]", "parallel [s]", "speedup");

  VotingRule rule = majority_rule({{3, 1.0}});
  Nonlinearity F(rule);

  {
    Grid g = Grid::make(40.0, nodes);
    SolverConfig cfg;
    cfg.gamma = 1.3;
    auto march = [&](bool parallel) {
      SolverConfig c = cfg;
      c.parallel = parallel;
      Field u = Field::constant(g, 1.0);
      for (int s = 0; s < steps; ++s) u = step_nonlocal(u, F, c);
      sink += u.values[g.n / 2];
    };
    double ts = best_of(3, [&] { march(false); });
    double tp = best_of(3, [&] { march(true); });
    std::printf("%-28s %12.3f %12.3f %8.2fx\n", "explicit nonlocal stepping", ts, tp, ts / tp);
  }

  {
    SimConfig cfg;
    cfg.x0 = 0.5;
    cfg.gamma = 1.4;
    cfg.zeta = 1.0;
    cfg.horizon = 3.0;
    cfg.seed = 7;
    double ts = best_of(3, [&] {
      auto v = run_trials_serial(rule, cfg, trials, SimMode::value);
      sink += v.back().value;
    });
    double tp = best_of(3, [&] {
      auto v = run_trials(rule, cfg, trials, SimMode::value);
      sink += v.back().value;
    });
    std::printf("%-28s %12.3f %12.3f %8.2fx\n", "trial batches (value mode)", ts, tp, ts / tp);
  }

  if (sink == -1.0) std::printf("%g\n", sink);
  return 0;
}
