#pragma once
#include <cstdint>
#include <vector>

#include "abb/rng.hpp"
#include "abb/voting_rule.hpp"

namespace abb {

// One branching-random-walk trial: a generation-k particle diffuses with
// variance rate gamma^{2k} for an Exp(zeta) lifetime, then splits into
// n ~ offspring_pmf children of generation k+1 at its final position.
// Votes or values propagate back up through sampled rank thresholds.
struct SimConfig {
  double x0 = 0.0;
  double gamma = 2.0;      // >= 1; 1 degenerates to plain branching Brownian motion
  double zeta = 1.0;       // branch rate, > 0
  double horizon = 1.0;    // >= 0
  double cutoff_L = 0.0;   // > 0 enables freezing barriers at +-gamma^k L
  std::int64_t particle_cap = 1'000'000;
  std::uint64_t seed = 1;
  int start_generation = 0;  // shifts every diffusivity by gamma^{2*start_generation}

  void validate() const;
};

struct TrialOutcome {
  int vote = 0;              // +-1 in vote mode
  double value = 0.0;        // root value in value mode
  std::int64_t particles_peaked = 0;  // particles realized during the trial
  std::int64_t leaves_alive = 0;      // leaves that reached the horizon
  bool truncated = false;    // particle cap hit; exclude from unbiased estimators
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;            // trials entering the estimate
  std::int64_t truncated_trials = 0;  // excluded
  double u_hat = 0.0;                 // 2 P(vote=+1) - 1 in vote mode
  bool unreliable = false;            // > 1% of trials truncated
};

TrialOutcome simulate_vote(const VotingRule& rule, const SimConfig& cfg, std::uint64_t trial = 0);
TrialOutcome simulate_value(const VotingRule& rule, const SimConfig& cfg, std::uint64_t trial = 0);
TrialOutcome simulate_vote_cutoff(const VotingRule& rule, const SimConfig& cfg,
                                  std::uint64_t trial = 0);

// Per-trial record batches; the parallel path writes into per-trial slots, so
// its output is bit-identical to the serial reference.
enum class SimMode { vote, value };
std::vector<TrialOutcome> run_trials_serial(const VotingRule& rule, const SimConfig& cfg,
                                            std::int64_t trials, SimMode mode);
std::vector<TrialOutcome> run_trials(const VotingRule& rule, const SimConfig& cfg,
                                     std::int64_t trials, SimMode mode);

Estimate summarize_votes(const std::vector<TrialOutcome>& outcomes);
Estimate summarize_values(const std::vector<TrialOutcome>& outcomes);

// u(t, x0) = 2 P(vote = +1) - 1 over independent keyed trials.
Estimate estimate_u(const VotingRule& rule, const SimConfig& cfg, std::int64_t trials);
Estimate estimate_u_serial(const VotingRule& rule, const SimConfig& cfg, std::int64_t trials);

struct CdfPoint {
  double x = 0.0;
  double p = 0.0;   // P(X_horizon <= x)
  double se = 0.0;  // binomial standard error
};
struct ValueCdf {
  std::vector<CdfPoint> points;
  std::int64_t trials = 0;
  std::int64_t truncated_trials = 0;
  bool unreliable = false;
};

// Empirical CDF of the root value at the query points. Internally propagates
// query-interval indices instead of raw values: order statistics commute with
// nondecreasing maps, so once the expanded children pin the sampled rank the
// remaining siblings are skipped. Keyed per-node streams make the skip exact,
// not approximate: untouched subtrees consume no randomness.
ValueCdf estimate_value_cdf(const VotingRule& rule, const SimConfig& cfg, std::int64_t trials,
                            const std::vector<double>& query_points);

}  // namespace abb
