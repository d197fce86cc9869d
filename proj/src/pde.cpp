#include "abb/pde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace abb {

namespace {

void check_explicit_cfl(const Grid& g, double dt, double zeta, double lipschitz) {
  const double load = dt * (1.0 / (g.dx * g.dx) + zeta * std::max(1.0, lipschitz));
  if (load > 1.0 + 1e-12)
    throw std::invalid_argument("explicit step violates the monotonicity bound: dt*(1/dx^2 + zeta*L) = " +
                                std::to_string(load));
}

double pick_dt(const Grid& g, const SolverConfig& cfg, double lipschitz) {
  if (cfg.dt > 0.0) return cfg.dt;
  if (cfg.scheme == Scheme::imex)
    // Diffusion is implicit, so only the explicit reaction limits the step.
    return 0.1 * cfg.cfl_safety / (cfg.zeta * (lipschitz + 1.0));
  return auto_dt(g, cfg, lipschitz);
}

// Constant-coefficient Thomas solve of (1+2a) x_i - a (x_{i-1}+x_{i+1}) = rhs_i
// with x_0 = x_{n+1} = 0 folded into rhs by the caller.
struct Tridiag {
  double a = 0.0;
  std::vector<double> cp;  // forward-swept upper coefficients

  Tridiag(int n, double a_) : a(a_), cp(n) {
    if (n == 0) return;
    const double diag = 1.0 + 2.0 * a;
    cp[0] = -a / diag;
    for (int i = 1; i < n; ++i) cp[i] = -a / (diag + a * cp[i - 1]);
  }

  void solve(std::vector<double>& rhs) const {
    const int n = static_cast<int>(rhs.size());
    const double diag = 1.0 + 2.0 * a;
    rhs[0] /= diag;
    for (int i = 1; i < n; ++i) rhs[i] = (rhs[i] + a * rhs[i - 1]) / (diag + a * cp[i - 1]);
    for (int i = n - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
  }
};

// March on padded buffers. Reaction shape shared by every public entry point.
template <class Fn>
void march(std::vector<double>& cur, std::vector<double>& nxt, const Grid& g,
           const SolverConfig& cfg, const NonlocalStencil& st, Fn&& F, double lipschitz,
           double t0, double t1, double* last_rate) {
  const int n = g.n;
  double dt = pick_dt(g, cfg, lipschitz);
  if (cfg.scheme == Scheme::explicit_monotone) check_explicit_cfl(g, dt, cfg.zeta, lipschitz);

  Tridiag tri(cfg.scheme == Scheme::imex ? n : 0,
              cfg.scheme == Scheme::imex ? 0.5 * dt / (g.dx * g.dx) : 0.0);
  std::vector<double> rhs;
  if (cfg.scheme == Scheme::imex) rhs.resize(n);

  double t = t0;
  while (t < t1 - 1e-12 * std::max(1.0, t1)) {
    double step = std::min(dt, t1 - t);
    if (cfg.scheme == Scheme::explicit_monotone) {
      detail::explicit_step(cur.data(), nxt.data(), n, g.dx, step, cfg.zeta, st, F, cfg.parallel);
    } else {
      const double a = 0.5 * step / (g.dx * g.dx);
      const bool fresh = std::abs(step - dt) > 1e-15 * dt;
      Tridiag local = fresh ? Tridiag(n, a) : std::move(tri);
      for (int i = 1; i <= n; ++i) {
        const int k = st.idx[i - 1];
        const double wi = st.w[i - 1];
        const double uin = (1.0 - wi) * cur[k] + wi * cur[k + 1];
        rhs[i - 1] = cur[i] + step * cfg.zeta * (F(uin) - cur[i]);
      }
      rhs[0] += a * cur[0];
      rhs[n - 1] += a * cur[n + 1];
      local.solve(rhs);
      std::copy(rhs.begin(), rhs.end(), nxt.begin() + 1);
      if (!fresh) tri = std::move(local);
    }
    nxt[0] = cur[0];
    nxt[n + 1] = cur[n + 1];
    if (last_rate) {
      double md = 0.0;
      for (int i = 1; i <= n; ++i) md = std::max(md, std::abs(nxt[i] - cur[i]));
      *last_rate = md / step;
    }
    cur.swap(nxt);
    t += step;
  }
}

std::vector<double> pad(const Field& f, const SolverConfig& cfg) {
  std::vector<double> p(f.grid.n + 2);
  p[0] = cfg.bc_left;
  std::copy(f.values.begin(), f.values.end(), p.begin() + 1);
  p[f.grid.n + 1] = bc_right_value(cfg);
  return p;
}

Field unpad(std::vector<double>&& p, const Grid& g, double time) {
  std::vector<double> v(p.begin() + 1, p.end() - 1);
  return Field{g, std::move(v), time};
}

}  // namespace

Field step_nonlocal(const Field& f, const Nonlinearity& F, const SolverConfig& cfg) {
  return step_nonlocal(f, [&F](double u) { return F(u); }, F.lipschitz_bound, cfg);
}

Field step_nonlocal(const Field& f, const std::function<double(double)>& F, double lipschitz,
                    const SolverConfig& cfg) {
  const Grid& g = f.grid;
  double dt = pick_dt(g, cfg, lipschitz);
  NonlocalStencil st(g, cfg.gamma);
  auto cur = pad(f, cfg);
  std::vector<double> nxt(cur.size());
  SolverConfig one = cfg;
  one.dt = dt;
  march(cur, nxt, g, one, st, F, lipschitz, f.time, f.time + dt, nullptr);
  return unpad(std::move(cur), g, f.time + dt);
}

std::vector<Field> solve_cauchy(const Nonlinearity& F, const SolverConfig& cfg, const Grid& g,
                                const std::vector<double>& snapshot_times) {
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()))
    throw std::invalid_argument("snapshot times must be ascending");
  NonlocalStencil st(g, cfg.gamma);
  auto fn = [&F](double u) { return F(u); };
  const double lip = F.lipschitz_bound;

  // Voting initial data: +1 off the origin, pinned to 0 at x=0.
  std::vector<double> cur(g.n + 2, 1.0), nxt(g.n + 2);
  cur[0] = cfg.bc_left;
  cur[g.n + 1] = bc_right_value(cfg);

  std::vector<Field> out;
  double t = 0.0;
  for (double ts : snapshot_times) {
    if (ts < -1e-12) throw std::invalid_argument("snapshot times must be nonnegative");
    if (ts > t) {
      march(cur, nxt, g, cfg, st, fn, lip, t, ts, nullptr);
      t = ts;
    }
    auto copy = cur;
    out.push_back(unpad(std::move(copy), g, ts));
  }
  return out;
}

SteadyResult steady_state(const Nonlinearity& F, const SolverConfig& cfg, const Grid& g) {
  NonlocalStencil st(g, cfg.gamma);
  auto fn = [&F](double u) { return F(u); };
  const double lip = F.lipschitz_bound;
  const double dt = pick_dt(g, cfg, lip);

  std::vector<double> cur(g.n + 2, 1.0), nxt(g.n + 2);
  cur[0] = cfg.bc_left;
  cur[g.n + 1] = bc_right_value(cfg);

  SolverConfig mcfg = cfg;
  mcfg.dt = dt;
  // Chunked march: cheap convergence probe between chunks, exact time kept.
  const double chunk = 64.0 * dt;
  double t = 0.0, rate = 0.0;
  bool converged = false;
  while (t < cfg.t_end - 1e-12) {
    double next = std::min(cfg.t_end, t + chunk);
    march(cur, nxt, g, mcfg, st, fn, lip, t, next, &rate);
    t = next;
    if (rate < cfg.steady_tol) {
      converged = true;
      break;
    }
  }
  SteadyResult r;
  r.field = unpad(std::move(cur), g, t);
  r.converged = converged;
  r.rate = rate;
  r.t_reached = t;
  return r;
}

std::vector<double> residual_nonlocal(const Field& f, const Nonlinearity& F,
                                      const SolverConfig& cfg) {
  const Grid& g = f.grid;
  NonlocalStencil st(g, cfg.gamma);
  auto U = pad(f, cfg);
  std::vector<double> r(g.n);
  const double inv = 1.0 / (g.dx * g.dx);
  for (int i = 1; i <= g.n; ++i) {
    const int k = st.idx[i - 1];
    const double wi = st.w[i - 1];
    const double uin = (1.0 - wi) * U[k] + wi * U[k + 1];
    r[i - 1] = 0.5 * inv * (U[i - 1] - 2.0 * U[i] + U[i + 1]) + cfg.zeta * (F(uin) - U[i]);
  }
  return r;
}

double local_model_auto_dt(const Grid& g, const SolverConfig& cfg, double lipschitz_f, double nu,
                           double b, double t) {
  const double diff = 0.5 * std::exp(-2.0 * nu * t);
  const double vmax = std::abs(b - nu) * g.L;
  return cfg.cfl_safety / (2.0 * diff / (g.dx * g.dx) + vmax / g.dx + cfg.zeta * lipschitz_f);
}

Field step_local_model(const Field& f, const std::function<double(double)>& f_reaction,
                       double lipschitz_f, double nu, double b, const SolverConfig& cfg) {
  const Grid& g = f.grid;
  const int n = g.n;
  const double dt = cfg.dt > 0.0 ? cfg.dt : local_model_auto_dt(g, cfg, lipschitz_f, nu, b, f.time);
  const double diff = 0.5 * std::exp(-2.0 * nu * (f.time + 0.5 * dt));
  const double vmax = std::abs(b - nu) * g.L;
  const double load = dt * (2.0 * diff / (g.dx * g.dx) + vmax / g.dx + cfg.zeta * lipschitz_f);
  if (load > 1.0 + 1e-12)
    throw std::invalid_argument("local-model step violates the monotonicity bound");

  auto U = pad(f, cfg);
  std::vector<double> out(n);
  const double a = diff * dt / (g.dx * g.dx);
  const double drift = b - nu;
  for (int i = 1; i <= n; ++i) {
    const double v = drift * g.x(i - 1);
    const double adv = v >= 0.0 ? v * (U[i] - U[i - 1]) / g.dx : v * (U[i + 1] - U[i]) / g.dx;
    out[i - 1] = U[i] + a * (U[i - 1] - 2.0 * U[i] + U[i + 1]) - dt * adv +
                 dt * cfg.zeta * f_reaction(U[i]);
  }
  return Field{g, std::move(out), f.time + dt};
}

}  // namespace abb
