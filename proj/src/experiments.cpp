#include "abb/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "abb/certificates.hpp"

namespace abb {

namespace {

// Padded-node accessor: index 0 is the origin boundary, n+1 the right one.
double node_value(const Field& f, const SolverConfig& cfg, int j) {
  if (j <= 0) return cfg.bc_left;
  if (j >= f.grid.n + 1) return bc_right_value(cfg);
  return f.values[j - 1];
}

// Linear interpolation of the field at position x, boundary values included.
double field_at(const Field& f, const SolverConfig& cfg, double x) {
  const Grid& g = f.grid;
  if (x <= 0.0) return cfg.bc_left;
  if (x >= g.L) return bc_right_value(cfg);
  double t = x / g.dx;
  int j = static_cast<int>(t);
  double w = t - j;
  return (1.0 - w) * node_value(f, cfg, j) + w * node_value(f, cfg, j + 1);
}

// Step size the marcher would pick on its own; mirrored here so partial
// advances land exactly on requested times without shrinking every step.
double base_dt(const Grid& g, const SolverConfig& cfg, double lipschitz) {
  if (cfg.dt > 0.0) return cfg.dt;
  if (cfg.scheme == Scheme::imex) return 0.1 * cfg.cfl_safety / (cfg.zeta * (lipschitz + 1.0));
  return auto_dt(g, cfg, lipschitz);
}

void advance_to(Field& f, const Nonlinearity& F, const SolverConfig& cfg, double t_target) {
  const double dt0 = base_dt(f.grid, cfg, F.lipschitz_bound);
  while (f.time < t_target - 1e-12 * std::max(1.0, t_target)) {
    SolverConfig one = cfg;
    one.dt = std::min(dt0, t_target - f.time);
    f = step_nonlocal(f, F, one);
  }
}

// First upward crossing of level q, scanning from the origin with both
// boundary values in play. Returns a negative value when the level is
// nowhere reached.
double level_position(const Field& f, const SolverConfig& cfg, double q) {
  const Grid& g = f.grid;
  if (node_value(f, cfg, 0) >= q) return 0.0;
  for (int j = 1; j <= g.n + 1; ++j) {
    double hi = node_value(f, cfg, j);
    if (hi >= q) {
      double lo = node_value(f, cfg, j - 1);
      return ((j - 1) + (q - lo) / (hi - lo)) * g.dx;
    }
  }
  return -1.0;
}

// Same-dx domain doubling: n -> 2n+1 keeps dx = L/(n+1) invariant, new
// nodes take the right-boundary value the front has not yet reached.
Field doubled_domain(const Field& f, const SolverConfig& cfg) {
  Grid g2 = Grid::make(2.0 * f.grid.L, 2 * f.grid.n + 1);
  std::vector<double> v(g2.n, bc_right_value(cfg));
  std::copy(f.values.begin(), f.values.end(), v.begin());
  return Field{g2, std::move(v), f.time};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

PhaseScanResult phase_scan(const VotingRule& rule, double zeta, const std::vector<double>& gammas,
                           const SolverConfig& scfg, const Grid& grid) {
  if (gammas.empty()) throw std::invalid_argument("phase_scan needs at least one gamma");
  for (double g : gammas)
    if (!(g > 1.0)) throw std::invalid_argument("phase_scan needs every gamma > 1");
  if (!(zeta > 0.0)) throw std::invalid_argument("phase_scan needs zeta > 0");

  Nonlinearity F(rule);
  PhaseScanResult out;
  out.xi = F.Xi;
  // F at or below the diagonal for all v > 0: the large-time profile on the
  // half line vanishes identically, so every row is trivial no matter what
  // the boundary-propped finite-domain steady state looks like.
  const bool degenerate = !(F.Xi > 1e-12);

  std::vector<double> gs = gammas;
  std::sort(gs.begin(), gs.end());

  for (double gamma : gs) {
    SolverConfig cfg = scfg;
    cfg.gamma = gamma;
    cfg.zeta = zeta;
    SteadyResult sr = steady_state(F, cfg, grid);

    PhaseRow row;
    row.gamma = gamma;
    row.converged = sr.converged;
    // Classify on x <= L/2 only: the Dirichlet 1 at x = L props the profile
    // up near the boundary in every regime, so the far half says nothing.
    double mx = 0.0;
    for (int i = 0; i < grid.n && grid.x(i) <= 0.5 * grid.L; ++i)
      mx = std::max(mx, sr.field.values[i]);
    row.max_U_half = mx;
    for (double r : residual_nonlocal(sr.field, F, cfg))
      row.residual_max = std::max(row.residual_max, std::abs(r));
    if (degenerate) {
      row.trivial = true;
    } else {
      row.trivial = mx <= 0.05;
      row.nontrivial = mx >= 0.5 * F.Xi;
    }
    out.rows.push_back(row);
  }

  out.bracket_lo = 0.0;
  out.bracket_hi = std::numeric_limits<double>::infinity();
  for (const PhaseRow& r : out.rows)
    if (r.nontrivial) out.bracket_lo = std::max(out.bracket_lo, r.gamma);
  for (const PhaseRow& r : out.rows)
    if (r.trivial && r.gamma > out.bracket_lo) {
      out.bracket_hi = r.gamma;
      break;
    }
  bool seen_trivial = false;
  for (const PhaseRow& r : out.rows) {
    if (r.trivial) seen_trivial = true;
    if (r.nontrivial && seen_trivial) out.monotone = false;
  }
  return out;
}

// ---------------------------------------------------------------------------

SpreadingFit speed_fit(const VotingRule& rule, double zeta, double gamma, double q, double t_lo,
                       double t_hi, int samples, const SolverConfig& scfg, const Grid& grid) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("speed_fit needs q in (0,1)");
  if (!(t_lo >= 0.0 && t_hi > t_lo)) throw std::invalid_argument("speed_fit needs 0 <= t_lo < t_hi");
  if (samples < 2) throw std::invalid_argument("speed_fit needs at least 2 samples");
  if (!(zeta > 0.0)) throw std::invalid_argument("speed_fit needs zeta > 0");

  Nonlinearity F(rule);
  if (!(gamma > F.Upsilon))
    throw std::invalid_argument("speed_fit needs gamma > Upsilon_F = " + fmt(F.Upsilon) +
                                " (exponential-spreading regime)");

  SolverConfig cfg = scfg;
  cfg.gamma = gamma;
  cfg.zeta = zeta;

  SpreadingFit fit;
  fit.q = q;
  if (F.Fprime0 > 1.0 && gamma > 1.0) {
    SpeedPair sp = speeds(F, zeta, gamma);
    fit.c_under = sp.c_under;
    fit.c_over = sp.c_over;
  }

  Field f = Field::constant(grid, 1.0);

  // The front may outrun the box between samples, so growth checks run on a
  // finer cadence than the sample times themselves.
  const double micro = std::min(0.25, (t_hi - t_lo) / (8.0 * (samples - 1)));
  int doublings = 0;
  auto grow_if_needed = [&]() {
    double xq = level_position(f, cfg, q);
    while (xq >= 0.0 && xq > 0.4 * f.grid.L) {
      if (++doublings > 30)
        throw std::runtime_error("speed_fit: front pinned to the boundary after 30 domain doublings");
      f = doubled_domain(f, cfg);
    }
  };

  for (int k = 0; k < samples; ++k) {
    double ts = t_lo + (t_hi - t_lo) * k / (samples - 1);
    while (f.time < ts - 1e-12 * std::max(1.0, ts)) {
      advance_to(f, F, cfg, std::min(ts, f.time + micro));
      grow_if_needed();
    }
    double xq = level_position(f, cfg, q);
    if (xq < 0.0)
      throw std::runtime_error("speed_fit: level q=" + fmt(q) + " never crossed at t=" + fmt(ts));
    fit.times.push_back(ts);
    fit.positions.push_back(xq);
  }

  // Least squares for log x_q(t) = a + c t; half width is ~2 standard
  // errors of the slope, a plain t-free normal approximation.
  const int m = samples;
  double st = 0.0, sy = 0.0;
  std::vector<double> ly(m);
  for (int i = 0; i < m; ++i) {
    if (!(fit.positions[i] > 0.0))
      throw std::runtime_error("speed_fit: level position vanished at t=" + fmt(fit.times[i]));
    ly[i] = std::log(fit.positions[i]);
    st += fit.times[i];
    sy += ly[i];
  }
  st /= m;
  sy /= m;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < m; ++i) {
    sxx += (fit.times[i] - st) * (fit.times[i] - st);
    sxy += (fit.times[i] - st) * (ly[i] - sy);
  }
  fit.slope = sxy / sxx;
  double ss = 0.0;
  for (int i = 0; i < m; ++i) {
    double r = ly[i] - sy - fit.slope * (fit.times[i] - st);
    ss += r * r;
  }
  fit.half_width = m > 2 ? 2.0 * std::sqrt(ss / (m - 2) / sxx) : 0.0;

  if (fit.c_over > 0.0) {
    double lo = fit.c_under - 0.25 * std::abs(fit.c_under);
    double hi = fit.c_over + 0.25 * std::abs(fit.c_over);
    fit.within_band = fit.slope >= lo && fit.slope <= hi;
  }
  return fit;
}

// ---------------------------------------------------------------------------

std::vector<CrossvalRow> crossval(const VotingRule& rule, double zeta, double gamma,
                                  const std::vector<std::pair<double, double>>& points,
                                  std::int64_t trials, std::uint64_t seed,
                                  const SolverConfig& scfg, const Grid& grid,
                                  std::int64_t particle_cap) {
  if (points.empty()) throw std::invalid_argument("crossval needs at least one (t,x) point");
  if (trials <= 0) throw std::invalid_argument("crossval needs trials > 0");
  for (auto& [t, x] : points) {
    if (t < 0.0) throw std::invalid_argument("crossval needs t >= 0");
    if (x < 0.0 || x > grid.L)
      throw std::invalid_argument("crossval point x=" + fmt(x) + " outside the solver domain");
  }

  Nonlinearity F(rule);
  SolverConfig cfg = scfg;
  cfg.gamma = gamma;
  cfg.zeta = zeta;

  std::vector<double> ts;
  for (auto& [t, x] : points)
    if (t > 0.0) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<Field> snaps = solve_cauchy(F, cfg, grid, ts);

  std::vector<CrossvalRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto [t, x] = points[i];
    CrossvalRow row;
    row.t = t;
    row.x = x;
    if (t > 0.0) {
      auto it = std::lower_bound(ts.begin(), ts.end(), t);
      row.u_pde = field_at(snaps[it - ts.begin()], cfg, x);
    } else {
      row.u_pde = x > 0.0 ? 1.0 : cfg.bc_left;  // voting initial data
    }

    SimConfig mc;
    mc.x0 = x;
    mc.gamma = gamma;
    mc.zeta = zeta;
    mc.horizon = t;
    mc.particle_cap = particle_cap;
    mc.seed = seed + i;  // independent streams per point
    Estimate est = estimate_u(rule, mc, trials);

    row.u_mc = est.u_hat;
    row.se = est.std_error;
    row.diff = row.u_mc - row.u_pde;
    row.pass = std::abs(row.diff) <= 3.0 * row.se + 0.02;
    row.mc_unreliable = est.unreliable;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

CdfCheckResult cdf_check(const VotingRule& rule, double zeta, double gamma, double t_large,
                         std::int64_t trials, std::uint64_t seed,
                         const std::vector<double>& query, const SolverConfig& scfg,
                         const Grid& grid, std::int64_t particle_cap) {
  if (query.empty()) throw std::invalid_argument("cdf_check needs at least one query point");
  if (trials <= 0) throw std::invalid_argument("cdf_check needs trials > 0");
  if (!(t_large > 0.0)) throw std::invalid_argument("cdf_check needs t > 0");
  if (!rule.odd_symmetric)
    throw std::invalid_argument("cdf_check needs an odd-symmetric rule");

  Nonlinearity F(rule);
  if (std::abs(F.Xi - 1.0) > 1e-9)
    throw std::invalid_argument("cdf_check needs fixed point 1, rule has " + fmt(F.Xi));

  SolverConfig cfg = scfg;
  cfg.gamma = gamma;
  cfg.zeta = zeta;
  SteadyResult sr = steady_state(F, cfg, grid);

  SimConfig mc;
  mc.x0 = 0.0;
  mc.gamma = gamma;
  mc.zeta = zeta;
  mc.horizon = t_large;
  mc.particle_cap = particle_cap;
  mc.seed = seed;
  ValueCdf vc = estimate_value_cdf(rule, mc, trials, query);

  CdfCheckResult out;
  out.trials = vc.trials;
  out.truncated = vc.truncated_trials;
  out.unreliable = vc.unreliable;
  out.steady_converged = sr.converged;
  out.all_pass = sr.converged;
  for (std::size_t k = 0; k < query.size(); ++k) {
    CdfRow row;
    row.x = query[k];
    // Odd extension of the half-line profile gives the signed law:
    // P(X <= x) = (1 + U(|x|) sgn x) / 2.
    double U = row.x >= 0.0 ? field_at(sr.field, cfg, row.x) : -field_at(sr.field, cfg, -row.x);
    row.cdf_pde = 0.5 * (1.0 + U);
    row.cdf_mc = vc.points[k].p;
    row.se = vc.points[k].se;
    row.diff = row.cdf_mc - row.cdf_pde;
    row.pass = std::abs(row.diff) <= 3.0 * row.se + 0.02;
    out.all_pass = out.all_pass && row.pass;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------

CertifyBundle certify(const VotingRule& rule, double zeta, double gamma,
                      const CertifyParams& params) {
  if (!(zeta > 0.0)) throw std::invalid_argument("certify needs zeta > 0");
  if (!(gamma > 1.0)) throw std::invalid_argument("certify needs gamma > 1");
  if (!(params.B > 0.0 && params.B < 1.0 / gamma))
    throw std::invalid_argument("certify needs B in (0, 1/gamma); got B=" + fmt(params.B) +
                                " with 1/gamma=" + fmt(1.0 / gamma));
  if (!(params.alpha > 0.0 && params.alpha < 1.0))
    throw std::invalid_argument("certify needs alpha in (0,1)");
  if (params.nu < 0.0) throw std::invalid_argument("certify needs nu >= 0");
  if (params.pieces < 1 || params.grid_points < 10)
    throw std::invalid_argument("certify needs pieces >= 1 and grid_points >= 10");
  // Drift admissibility: the seed layer needs nu above zeta*Sigma(f, 1/B),
  // which is negative whenever f B > 1, so nu = 0 is often fine.
  double sig = sigma(params.f, 1.0 / params.B).value;
  if (!(params.nu > zeta * sig))
    throw std::invalid_argument("certify needs nu > zeta*Sigma(f,1/B) = " + fmt(zeta * sig));

  Nonlinearity F(rule);
  CertifyBundle bundle;
  nlohmann::json& rep = bundle.report;
  rep["params"] = {{"zeta", zeta},       {"gamma", gamma},
                   {"f", params.f},      {"B", params.B},
                   {"alpha", params.alpha}, {"nu", params.nu},
                   {"pieces", params.pieces}, {"grid_points", params.grid_points}};
  rep["rule"] = {{"Fprime0", F.Fprime0}, {"Xi", F.Xi}, {"Upsilon", F.Upsilon}};

  HFunction H = build_H(F, F.Xi, params.f);
  rep["H"] = to_json(H);

  double omega0 = -std::log(params.f) / std::log(params.B);
  double target = params.omega_target > 0.0 ? params.omega_target : 0.45 * params.alpha * omega0;
  VOmega v = build_v_omega(params.B, params.f, params.nu / zeta, params.alpha, target);
  rep["v_omega"] = {{"omega", v.omega}, {"m_omega", v.m_omega}, {"fn", to_json(*v.fn)}};

  double x_max = std::pow(params.B, -params.pieces);
  bundle.w = build_w(H, params.B, v, H.delta, x_max);
  rep["w"] = to_json(bundle.w);

  CertificateReport sub =
      check_subsolution_inequality(bundle.w, F, zeta, gamma, params.nu,
                                   offset_grid(bundle.w, params.grid_points));
  rep["subsolution"] = to_json(sub);
  bool all = sub.passed;

  // Decay certificates exist only above Upsilon_F; sweep the exponents that
  // give a positive rate and insist the checker also rejects 10% above it.
  if (gamma > F.Upsilon) {
    std::vector<double> xs(200);
    for (int i = 0; i < 200; ++i) xs[i] = 0.25 + (40.0 - 0.25) * i / 199.0;
    nlohmann::json sweep = nlohmann::json::array();
    for (double om : {0.25, 0.5, 0.75, 1.0}) {
      double bound = zeta * (1.0 - F.Upsilon * std::pow(gamma, -om));
      nlohmann::json row = {{"omega", om}, {"delta", bound}};
      if (bound > 1e-12) {
        CertificateReport ok = check_supersolution(bound, 1.0, om, F, zeta, gamma, xs);
        CertificateReport bad = check_supersolution(1.1 * bound, 1.0, om, F, zeta, gamma, xs);
        row["passed"] = ok.passed;
        row["rejects_above"] = !bad.passed;
        all = all && ok.passed && !bad.passed;
      } else {
        row["skipped"] = "nonpositive decay rate at this omega";
      }
      sweep.push_back(row);
    }
    rep["supersolution_sweep"] = sweep;
  } else {
    rep["supersolution_sweep"] = "skipped: gamma <= Upsilon_F";
  }

  bundle.all_pass = all;
  rep["all_pass"] = all;
  return bundle;
}

// ---------------------------------------------------------------------------

void write_trials_csv(const std::vector<TrialOutcome>& outcomes, SimMode mode, std::ostream& os) {
  os << "trial,vote_or_value,peak_particles,truncated\n";
  os.precision(17);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const TrialOutcome& o = outcomes[i];
    os << i << ',';
    if (mode == SimMode::vote)
      os << o.vote;
    else
      os << o.value;
    os << ',' << o.particles_peaked << ',' << (o.truncated ? 1 : 0) << '\n';
  }
}

void write_snapshots_csv(const std::vector<Field>& snaps, std::ostream& os) {
  os << "t,x,u\n";
  os.precision(17);
  for (const Field& f : snaps)
    for (int i = 0; i < f.grid.n; ++i)
      os << f.time << ',' << f.grid.x(i) << ',' << f.values[i] << '\n';
}

void write_steady_csv(const Field& f, std::ostream& os) {
  os << "x,U\n";
  os.precision(17);
  for (int i = 0; i < f.grid.n; ++i) os << f.grid.x(i) << ',' << f.values[i] << '\n';
}

nlohmann::json residual_summary(const Field& f, const Nonlinearity& F, const SolverConfig& cfg) {
  std::vector<double> r = residual_nonlocal(f, F, cfg);
  double mx = 0.0, l2 = 0.0;
  for (double v : r) {
    mx = std::max(mx, std::abs(v));
    l2 += v * v;
  }
  return {{"max_residual", mx}, {"l2_residual", std::sqrt(l2 * f.grid.dx)}, {"time", f.time}};
}

// ---------------------------------------------------------------------------

namespace {

SolverConfig solver_from_config(const ConfigMap& cfg) {
  SolverConfig s;
  std::string scheme = cfg.get_string("pde.scheme", "explicit");
  if (scheme == "explicit")
    s.scheme = Scheme::explicit_monotone;
  else if (scheme == "imex")
    s.scheme = Scheme::imex;
  else
    throw std::runtime_error("config: pde.scheme must be 'explicit' or 'imex'");
  std::string bc = cfg.get_string("pde.bc_right", "one");
  if (bc == "one")
    s.bc_right = BcRight::one;
  else if (bc == "zero")
    s.bc_right = BcRight::zero;
  else
    throw std::runtime_error("config: pde.bc_right must be 'one' or 'zero'");
  s.dt = cfg.get_double("pde.dt", 0.0);
  s.t_end = cfg.get_double("pde.t_end", 100.0);
  s.steady_tol = cfg.get_double("pde.steady_tol", 1e-8);
  return s;
}

Grid grid_from_config(const ConfigMap& cfg) {
  return Grid::make(cfg.get_double("pde.L", 40.0), static_cast<int>(cfg.get_int("pde.n", 799)));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << content;
}

std::string csv_bool(bool b) { return b ? "1" : "0"; }

}  // namespace

RunResult run_experiment(const std::string& kind, const ConfigMap& cfg,
                         const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  VotingRule rule = rule_from_config(cfg);
  SolverConfig scfg = solver_from_config(cfg);
  Grid grid = grid_from_config(cfg);
  const double zeta = cfg.get_double("experiment.zeta", 1.0);
  const std::int64_t trials = cfg.get_int("mc.trials", 20000);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("mc.seed", 1));
  const std::int64_t cap = cfg.get_int("mc.particle_cap", 1'000'000);

  RunResult rr;
  nlohmann::json& s = rr.summary;
  s["kind"] = kind;
  s["config"] = cfg.kv;

  if (kind == "phase_scan") {
    PhaseScanResult ps =
        phase_scan(rule, zeta, cfg.get_list("experiment.gammas"), scfg, grid);
    std::ostringstream csv;
    csv << "gamma,max_U_half,trivial,nontrivial,converged,residual_max\n";
    csv.precision(17);
    bool all_converged = true;
    nlohmann::json rows = nlohmann::json::array();
    for (const PhaseRow& r : ps.rows) {
      csv << r.gamma << ',' << r.max_U_half << ',' << csv_bool(r.trivial) << ','
          << csv_bool(r.nontrivial) << ',' << csv_bool(r.converged) << ',' << r.residual_max
          << '\n';
      all_converged = all_converged && r.converged;
      rows.push_back({{"gamma", r.gamma},
                      {"max_U_half", r.max_U_half},
                      {"trivial", r.trivial},
                      {"nontrivial", r.nontrivial},
                      {"converged", r.converged}});
    }
    write_file(out_dir + "/phase_scan.csv", csv.str());
    s["rows"] = rows;
    s["xi"] = ps.xi;
    s["bracket_lo"] = ps.bracket_lo;
    s["bracket_hi"] = std::isfinite(ps.bracket_hi) ? nlohmann::json(ps.bracket_hi)
                                                   : nlohmann::json("inf");
    s["monotone"] = ps.monotone;
    rr.pass = ps.monotone && all_converged;
  } else if (kind == "speed_fit") {
    SpreadingFit fit = speed_fit(rule, zeta, cfg.get_double("experiment.gamma"),
                                 cfg.get_double("experiment.q", 0.5),
                                 cfg.get_double("experiment.t_lo"),
                                 cfg.get_double("experiment.t_hi"),
                                 static_cast<int>(cfg.get_int("experiment.samples", 9)), scfg,
                                 grid);
    std::ostringstream csv;
    csv << "t,x_q,log_x_q\n";
    csv.precision(17);
    for (std::size_t i = 0; i < fit.times.size(); ++i)
      csv << fit.times[i] << ',' << fit.positions[i] << ',' << std::log(fit.positions[i]) << '\n';
    write_file(out_dir + "/speed_fit.csv", csv.str());
    s["q"] = fit.q;
    s["slope"] = fit.slope;
    s["half_width"] = fit.half_width;
    s["c_under"] = fit.c_under;
    s["c_over"] = fit.c_over;
    s["within_band"] = fit.within_band;
    rr.pass = fit.within_band;
  } else if (kind == "crossval") {
    auto rows = crossval(rule, zeta, cfg.get_double("experiment.gamma"),
                         cfg.get_pairs("experiment.points"), trials, seed, scfg, grid, cap);
    std::ostringstream csv;
    csv << "t,x,u_pde,u_mc,se,diff,pass,unreliable\n";
    csv.precision(17);
    bool all = true;
    nlohmann::json jr = nlohmann::json::array();
    for (const CrossvalRow& r : rows) {
      csv << r.t << ',' << r.x << ',' << r.u_pde << ',' << r.u_mc << ',' << r.se << ',' << r.diff
          << ',' << csv_bool(r.pass) << ',' << csv_bool(r.mc_unreliable) << '\n';
      all = all && r.pass && !r.mc_unreliable;
      jr.push_back({{"t", r.t},
                    {"x", r.x},
                    {"u_pde", r.u_pde},
                    {"u_mc", r.u_mc},
                    {"se", r.se},
                    {"pass", r.pass}});
    }
    write_file(out_dir + "/crossval.csv", csv.str());
    s["rows"] = jr;
    rr.pass = all;
  } else if (kind == "cdf_check") {
    CdfCheckResult res = cdf_check(rule, zeta, cfg.get_double("experiment.gamma"),
                                   cfg.get_double("experiment.t"), trials, seed,
                                   cfg.get_list("experiment.query"), scfg, grid, cap);
    std::ostringstream csv;
    csv << "x,cdf_mc,se,cdf_pde,diff,pass\n";
    csv.precision(17);
    for (const CdfRow& r : res.rows)
      csv << r.x << ',' << r.cdf_mc << ',' << r.se << ',' << r.cdf_pde << ',' << r.diff << ','
          << csv_bool(r.pass) << '\n';
    write_file(out_dir + "/cdf.csv", csv.str());
    s["trials"] = res.trials;
    s["truncated"] = res.truncated;
    s["unreliable"] = res.unreliable;
    s["steady_converged"] = res.steady_converged;
    s["all_pass"] = res.all_pass;
    rr.pass = res.all_pass && !res.unreliable;
  } else if (kind == "certify") {
    CertifyParams p;
    p.f = cfg.get_double("experiment.f", p.f);
    p.B = cfg.get_double("experiment.B", p.B);
    p.alpha = cfg.get_double("experiment.alpha", p.alpha);
    p.nu = cfg.get_double("experiment.nu", p.nu);
    p.omega_target = cfg.get_double("experiment.omega_target", p.omega_target);
    p.pieces = static_cast<int>(cfg.get_int("experiment.pieces", p.pieces));
    p.grid_points = static_cast<int>(cfg.get_int("experiment.grid_points", p.grid_points));
    CertifyBundle bundle = certify(rule, zeta, cfg.get_double("experiment.gamma"), p);
    write_file(out_dir + "/certificate.json", bundle.report.dump(2) + "\n");
    std::ostringstream csv;
    write_piecewise_csv(bundle.w, 200, csv);
    write_file(out_dir + "/w_samples.csv", csv.str());
    s["certificate"] = bundle.report;
    rr.pass = bundle.all_pass;
  } else {
    throw std::runtime_error("unknown experiment kind '" + kind +
                             "' (expected phase_scan, speed_fit, crossval, cdf_check, certify)");
  }

#ifdef ABB_GIT_DESCRIBE
  s["git"] = ABB_GIT_DESCRIBE;
#else
  s["git"] = "unknown";
#endif
  s["pass"] = rr.pass;
  s["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(out_dir + "/summary.json", s.dump(2) + "\n");
  return rr;
}

}  // namespace abb
