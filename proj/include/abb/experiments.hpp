#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "abb/config.hpp"
#include "abb/nonlinearity.hpp"
#include "abb/particle_sim.hpp"
#include "abb/pde.hpp"
#include "abb/piecewise.hpp"
#include "abb/voting_rule.hpp"
#include "json.hpp"

namespace abb {

// ---------------------------------------------------------------------------
// phase_scan: steady-state classification across a gamma list

struct PhaseRow {
  double gamma = 0.0;
  double max_U_half = 0.0;  // max over x <= L/2, away from the pinned boundary
  bool trivial = false;
  bool nontrivial = false;
  bool converged = false;
  double residual_max = 0.0;
};

struct PhaseScanResult {
  std::vector<PhaseRow> rows;
  double xi = 0.0;
  // transition bracket: largest nontrivial gamma .. smallest trivial gamma.
  // 0 / +inf mark a transition outside the scanned range on that side.
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool monotone = true;  // no trivial row below a nontrivial one
};

PhaseScanResult phase_scan(const VotingRule& rule, double zeta,
                           const std::vector<double>& gammas, const SolverConfig& scfg,
                           const Grid& grid);

// ---------------------------------------------------------------------------
// speed_fit: exponential spreading rate of the level set x_q(t)

struct SpreadingFit {
  double q = 0.5;
  std::vector<double> times;
  std::vector<double> positions;  // x_q(t), first upward grid crossing of q
  double slope = 0.0;             // least-squares slope of log x_q vs t
  double half_width = 0.0;        // ~95% half width on the slope
  double c_under = 0.0;           // zeta * Sigma(Upsilon_F, gamma)
  double c_over = 0.0;            // zeta * Sigma(F'(0), gamma)
  bool within_band = false;       // inside [c_under, c_over] widened by 25%
};

// Marches on a growing domain (L doubles whenever the front passes 0.4 L,
// the field is extended with the right boundary value) and samples x_q at
// `samples` evenly spaced times in [t_lo, t_hi].
SpreadingFit speed_fit(const VotingRule& rule, double zeta, double gamma, double q, double t_lo,
                       double t_hi, int samples, const SolverConfig& scfg, const Grid& grid);

// ---------------------------------------------------------------------------
// crossval: Monte Carlo vs PDE at chosen (t, x) points

struct CrossvalRow {
  double t = 0.0, x = 0.0;
  double u_pde = 0.0;
  double u_mc = 0.0;
  double se = 0.0;
  double diff = 0.0;
  bool pass = false;
  bool mc_unreliable = false;  // truncation above 1% of trials
};

std::vector<CrossvalRow> crossval(const VotingRule& rule, double zeta, double gamma,
                                  const std::vector<std::pair<double, double>>& points,
                                  std::int64_t trials, std::uint64_t seed,
                                  const SolverConfig& scfg, const Grid& grid,
                                  std::int64_t particle_cap);

// ---------------------------------------------------------------------------
// cdf_check: empirical law of X_t against the steady-state profile

struct CdfRow {
  double x = 0.0;
  double cdf_mc = 0.0;
  double se = 0.0;
  double cdf_pde = 0.0;  // (1 + U_inf(x)) / 2
  double diff = 0.0;
  bool pass = false;
};

struct CdfCheckResult {
  std::vector<CdfRow> rows;
  std::int64_t trials = 0;
  std::int64_t truncated = 0;
  bool unreliable = false;
  bool steady_converged = false;
  bool all_pass = false;
};

// Requires an odd-symmetric rule with fixed point 1 (precondition error
// otherwise): P(X_t <= x) is compared with (1 + U(|x|) sgn x) / 2.
CdfCheckResult cdf_check(const VotingRule& rule, double zeta, double gamma, double t_large,
                         std::int64_t trials, std::uint64_t seed,
                         const std::vector<double>& query, const SolverConfig& scfg,
                         const Grid& grid, std::int64_t particle_cap);

// ---------------------------------------------------------------------------
// certify: analytic certificate chain + supersolution sweep as one bundle

struct CertifyParams {
  double f = 1.4;
  double B = 0.82;
  double alpha = 0.9;
  double nu = 0.0;
  double omega_target = 0.0;  // <= 0 picks 0.45 * alpha * omega0
  int pieces = 40;            // w spans [0, B^-pieces]
  int grid_points = 10000;
};

struct CertifyBundle {
  nlohmann::json report;
  PiecewiseFn w;  // the constructed scaffold, kept for CSV sampling
  bool all_pass = false;
};

CertifyBundle certify(const VotingRule& rule, double zeta, double gamma,
                      const CertifyParams& params);

// ---------------------------------------------------------------------------
// record writers shared by the drivers

void write_trials_csv(const std::vector<TrialOutcome>& outcomes, SimMode mode, std::ostream& os);
void write_snapshots_csv(const std::vector<Field>& snaps, std::ostream& os);
void write_steady_csv(const Field& f, std::ostream& os);
nlohmann::json residual_summary(const Field& f, const Nonlinearity& F, const SolverConfig& cfg);

// ---------------------------------------------------------------------------
// config-driven dispatcher used by the CLI: runs the experiment named by
// kind, writes CSV tables plus summary.json into out_dir, and reports the
// overall pass/fail rollup.

struct RunResult {
  bool pass = false;
  nlohmann::json summary;
};

RunResult run_experiment(const std::string& kind, const ConfigMap& cfg,
                         const std::string& out_dir);

}  // namespace abb
