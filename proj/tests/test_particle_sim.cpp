#include <cmath>
#include <vector>

#include "abb/particle_sim.hpp"
#include "doctest.h"
#include "rule_family.hpp"

using namespace abb;
using abb_test::point_rule;

namespace {

bool same_outcome(const TrialOutcome& a, const TrialOutcome& b) {
  return a.vote == b.vote && a.value == b.value && a.particles_peaked == b.particles_peaked &&
         a.leaves_alive == b.leaves_alive && a.truncated == b.truncated;
}

}  // namespace

TEST_CASE("identical configuration replays bit-for-bit, serial or parallel") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.gamma = 1.3;
  cfg.horizon = 1.5;
  cfg.seed = 2024;
  auto a = run_trials_serial(rule, cfg, 500, SimMode::vote);
  auto b = run_trials_serial(rule, cfg, 500, SimMode::vote);
  auto c = run_trials(rule, cfg, 500, SimMode::vote);
  for (int t = 0; t < 500; ++t) {
    CHECK(same_outcome(a[t], b[t]));
    CHECK(same_outcome(a[t], c[t]));
  }
  auto v1 = run_trials_serial(rule, cfg, 200, SimMode::value);
  auto v2 = run_trials(rule, cfg, 200, SimMode::value);
  for (int t = 0; t < 200; ++t) CHECK(same_outcome(v1[t], v2[t]));
}

TEST_CASE("zero horizon returns the initial condition") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.x0 = 3.0;
  cfg.horizon = 0.0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto o = simulate_vote(rule, cfg, t);
    CHECK(o.vote == +1);
    CHECK(o.particles_peaked == 1);
    CHECK_FALSE(o.truncated);
    CHECK(simulate_value(rule, cfg, t).value == 3.0);
  }
}

TEST_CASE("symmetric start gives a null vote within noise") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.gamma = 1.3;
  cfg.horizon = 1.5;
  cfg.seed = 7;
  auto est = estimate_u(rule, cfg, 4000);
  CHECK(est.trials == 4000);
  CHECK(std::abs(est.u_hat) <= 3.0 * est.std_error);
}

TEST_CASE("single lineage is exactly Brownian when gamma is 1") {
  // branching into one child never changes the law of the path
  auto rule = point_rule(1, 1);
  SimConfig cfg;
  cfg.gamma = 1.0;
  cfg.horizon = 1.0;
  cfg.x0 = 1.0;
  cfg.zeta = 0.5;
  auto lo = estimate_u(rule, cfg, 100000);
  cfg.zeta = 5.0;
  cfg.seed = 77;
  auto hi = estimate_u(rule, cfg, 100000);
  const double exact = std::erf(1.0 / std::sqrt(2.0));
  CHECK(std::abs(lo.u_hat - exact) <= 3.0 * lo.std_error);
  CHECK(std::abs(hi.u_hat - exact) <= 3.0 * hi.std_error);
  CHECK(std::abs(lo.u_hat - hi.u_hat) <=
        3.0 * std::sqrt(lo.std_error * lo.std_error + hi.std_error * hi.std_error));
}

TEST_CASE("accelerated single lineage matches the generation-summed variance") {
  auto rule = point_rule(1, 1);
  SimConfig cfg;
  cfg.gamma = 1.5;
  cfg.zeta = 1.0;
  cfg.horizon = 1.0;
  cfg.seed = 5;
  const std::int64_t n = 50000;
  auto out = run_trials(rule, cfg, n, SimMode::value);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& o : out) {
    sum += o.value;
    sumsq += o.value * o.value;
  }
  const double mean = sum / n, var = sumsq / n - mean * mean;
  // E Var = (e^{zeta t (gamma^2-1)} - 1)/(zeta (gamma^2-1)); generous margin
  // over the 3-sigma band for the heavy-tailed variance mixture
  const double exact = (std::exp(cfg.zeta * cfg.horizon * (cfg.gamma * cfg.gamma - 1.0)) - 1.0) /
                       (cfg.zeta * (cfg.gamma * cfg.gamma - 1.0));
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / n));
  CHECK(std::abs(var - exact) <= 0.10 * exact);
}

TEST_CASE("vote equals the sign of the propagated value, trial by trial") {
  // rank draws are shared between the two modes, so the coupling is exact
  for (const auto& rule :
       {majority_rule({{3, 1.0}}), make_rule({{1, 0.3}, {3, 0.7}}, {{1, {1.0}}, {3, {0.3, 0.4, 0.3}}}),
        majority_rule({{2, 0.4}, {4, 0.6}})}) {
    SimConfig cfg;
    cfg.gamma = 1.4;
    cfg.horizon = 1.2;
    cfg.seed = 99;
    for (std::uint64_t t = 0; t < 700; ++t) {
      auto vote = simulate_vote(rule, cfg, t);
      auto value = simulate_value(rule, cfg, t);
      CHECK(vote.vote == (value.value > 0 ? +1 : -1));
    }
  }
}

TEST_CASE("generation shift rescales space exactly in law") {
  auto rule = majority_rule({{3, 1.0}});
  const double gamma = 1.4, x = 1.0;
  SimConfig base;
  base.gamma = gamma;
  base.horizon = 1.0;
  base.x0 = x;
  base.seed = 11;
  auto u0 = estimate_u(rule, base, 4000);
  for (int ell : {-2, -1, 1, 2}) {
    SimConfig shifted = base;
    shifted.start_generation = ell;
    shifted.x0 = std::pow(gamma, ell) * x;
    shifted.seed = 11 + ell;  // independent sample of the same law
    auto ul = estimate_u(rule, shifted, 4000);
    const double combined =
        std::sqrt(u0.std_error * u0.std_error + ul.std_error * ul.std_error);
    CHECK(std::abs(ul.u_hat - u0.u_hat) <= 3.0 * combined);
  }
  // same seed: every increment scales by gamma^ell, so votes couple almost
  // surely (up to sign flips within rounding of zero)
  SimConfig coupled = base;
  coupled.start_generation = 2;
  coupled.x0 = std::pow(gamma, 2) * x;
  auto a = run_trials(rule, base, 2000, SimMode::vote);
  auto b = run_trials(rule, coupled, 2000, SimMode::vote);
  int mismatches = 0;
  for (int t = 0; t < 2000; ++t) mismatches += a[t].vote != b[t].vote;
  CHECK(mismatches <= 20);
}

TEST_CASE("mean population matches the branching-process growth rate") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.gamma = 1.2;
  cfg.zeta = 1.0;
  cfg.horizon = 2.0;
  cfg.seed = 13;
  const std::int64_t n = 3000;
  auto out = run_trials(rule, cfg, n, SimMode::value);  // full expansion
  double sum = 0.0, sumsq = 0.0;
  for (const auto& o : out) {
    sum += static_cast<double>(o.leaves_alive);
    sumsq += static_cast<double>(o.leaves_alive) * o.leaves_alive;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sumsq / n - mean * mean) / n);
  const double exact = std::exp(cfg.zeta * cfg.horizon * (rule.mean_offspring - 1.0));
  CHECK(std::abs(mean - exact) <= 3.0 * se);
}

TEST_CASE("tiny particle caps freeze loudly instead of biasing silently") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.gamma = 1.2;
  cfg.horizon = 3.0;
  cfg.particle_cap = 10;
  cfg.seed = 3;
  auto est = estimate_u(rule, cfg, 300);
  CHECK(est.truncated_trials > 0);
  CHECK(est.trials + est.truncated_trials == 300);
  CHECK(est.unreliable);
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto o = simulate_vote(rule, cfg, t);
    CHECK((o.vote == 1 || o.vote == -1));
    if (o.truncated) CHECK(o.particles_peaked >= cfg.particle_cap);
  }
}

TEST_CASE("barrier mode: immediate freeze at or beyond the boundary") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.cutoff_L = 2.0;
  cfg.horizon = 1.0;
  cfg.x0 = 2.0;
  for (std::uint64_t t = 0; t < 30; ++t) {
    auto o = simulate_vote_cutoff(rule, cfg, t);
    CHECK(o.vote == +1);
    CHECK(o.particles_peaked == 1);
  }
  cfg.x0 = -2.5;
  CHECK(simulate_vote_cutoff(rule, cfg, 0).vote == -1);
  cfg.cutoff_L = 0.0;
  CHECK_THROWS(simulate_vote_cutoff(rule, cfg, 0));
}

TEST_CASE("barrier mode: symmetric start stays null") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.cutoff_L = 2.0;
  cfg.gamma = 1.2;
  cfg.horizon = 1.0;
  cfg.seed = 21;
  auto est = estimate_u(rule, cfg, 2000);
  CHECK(std::abs(est.u_hat) <= 3.0 * est.std_error);
}

TEST_CASE("distant barriers reproduce the free estimate") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig free_cfg;
  free_cfg.gamma = 1.3;
  free_cfg.horizon = 1.0;
  free_cfg.x0 = 1.0;
  free_cfg.seed = 17;
  SimConfig cut = free_cfg;
  cut.cutoff_L = 8.0;
  cut.seed = 18;
  auto a = estimate_u(rule, free_cfg, 4000);
  auto b = estimate_u(rule, cut, 4000);
  const double combined = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  CHECK(std::abs(a.u_hat - b.u_hat) <= 3.0 * combined);
}

TEST_CASE("value CDF: degenerate time is a step at the start") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.horizon = 0.0;
  auto cdf = estimate_value_cdf(rule, cfg, 50, {-0.5, 0.0, 0.5});
  CHECK(cdf.points[0].p == 0.0);
  CHECK(cdf.points[1].p == 1.0);
  CHECK(cdf.points[2].p == 1.0);
}

TEST_CASE("value CDF: median of a symmetric law sits at the origin") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.gamma = 1.2;
  cfg.horizon = 1.5;
  cfg.seed = 23;
  auto cdf = estimate_value_cdf(rule, cfg, 4000, {0.0});
  CHECK(std::abs(cdf.points[0].p - 0.5) <= 3.0 * cdf.points[0].se);
}

TEST_CASE("interval propagation replicates the fully expanded value law") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.gamma = 1.2;
  cfg.horizon = 2.0;
  cfg.seed = 29;
  const std::int64_t n = 800;
  const std::vector<double> q{-2.0, -0.5, 0.0, 0.8, 3.0};
  auto cdf = estimate_value_cdf(rule, cfg, n, q);
  auto full = run_trials(rule, cfg, n, SimMode::value);
  for (std::size_t j = 0; j < q.size(); ++j) {
    std::int64_t cnt = 0;
    for (const auto& o : full) cnt += o.value <= q[j];
    CHECK(cdf.points[j].p == static_cast<double>(cnt) / n);
  }
  CHECK(cdf.trials == n);
  CHECK(cdf.truncated_trials == 0);
}

TEST_CASE("value CDF requires a symmetric start") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.x0 = 1.0;
  CHECK_THROWS(estimate_value_cdf(rule, cfg, 10, {0.0}));
}

TEST_CASE("configuration validation") {
  auto rule = majority_rule({{3, 1.0}});
  SimConfig cfg;
  cfg.gamma = 0.9;
  CHECK_THROWS(simulate_vote(rule, cfg));
  cfg = SimConfig{};
  cfg.zeta = 0.0;
  CHECK_THROWS(simulate_vote(rule, cfg));
  cfg = SimConfig{};
  cfg.horizon = -1.0;
  CHECK_THROWS(simulate_vote(rule, cfg));
  cfg = SimConfig{};
  cfg.particle_cap = 0;
  CHECK_THROWS(simulate_vote(rule, cfg));
}
