#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "abb/nonlinearity.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace abb {

struct Grid {
  double L = 0.0;
  int n = 0;        // interior points
  double dx = 0.0;  // L/(n+1)

  static Grid make(double L, int n) {
    if (n < 16) throw std::invalid_argument("grid needs n >= 16");
    if (!(L > 0.0)) throw std::invalid_argument("grid needs L > 0");
    return Grid{L, n, L / (n + 1)};
  }
  double x(int i) const { return (i + 1) * dx; }  // interior node i in [0, n)
};

struct Field {
  Grid grid;
  std::vector<double> values;  // interior only
  double time = 0.0;

  static Field constant(const Grid& g, double v) {
    return Field{g, std::vector<double>(g.n, v), 0.0};
  }
};

enum class Scheme { explicit_monotone, imex };
enum class BcRight { one, zero };

struct SolverConfig {
  double gamma = 2.0;       // scaled-argument factor; 1 reduces to the local term
  double zeta = 1.0;
  double dt = 0.0;          // <= 0 selects the CFL-limited step
  Scheme scheme = Scheme::explicit_monotone;
  double t_end = 100.0;
  double steady_tol = 1e-8;  // per unit time
  BcRight bc_right = BcRight::one;
  double bc_left = 0.0;      // Dirichlet value at the origin
  double cfl_safety = 0.95;
  bool parallel = true;
};

inline double bc_right_value(const SolverConfig& cfg) {
  return cfg.bc_right == BcRight::one ? 1.0 : 0.0;
}

// Largest explicit step satisfying dt*(1/dx^2 + zeta*max(1,lipschitz)) <= 1,
// scaled by cfl_safety. The max guards reactions flatter than the -zeta*u
// loss term, whose coefficient must stay nonnegative on the diagonal.
inline double auto_dt(const Grid& g, const SolverConfig& cfg, double lipschitz) {
  return cfg.cfl_safety / (1.0 / (g.dx * g.dx) + cfg.zeta * std::max(1.0, lipschitz));
}

// Precomputed linear interpolation stencil for u(x_i/gamma) on the padded
// array U[0..n+1] (U[0]=left bc, U[n+1]=right bc). gamma >= 1 keeps the
// target inside [0, x_i], so no extrapolation ever happens.
struct NonlocalStencil {
  std::vector<int> idx;
  std::vector<double> w;

  NonlocalStencil() = default;
  NonlocalStencil(const Grid& g, double gamma) {
    if (!(gamma >= 1.0)) throw std::invalid_argument("nonlocal stencil needs gamma >= 1");
    idx.resize(g.n);
    w.resize(g.n);
    for (int i = 0; i < g.n; ++i) {
      double t = (i + 1) / gamma;  // target position in units of dx
      int k = static_cast<int>(t);
      if (k > g.n) k = g.n;
      idx[i] = k;
      w[i] = t - k;
    }
  }
};

namespace detail {

// One explicit monotone step on padded arrays: convex combination of
// neighbors plus an increasing reaction image, hence order-preserving under
// the CFL bound. cur and nxt are length n+2; boundary slots are read, the
// interior [1..n] is written.
template <class Fn>
void explicit_step(const double* cur, double* nxt, int n, double dx, double dt, double zeta,
                   const NonlocalStencil& st, Fn&& F, bool parallel) {
  const double a = 0.5 * dt / (dx * dx);
  const double keep = 1.0 - 2.0 * a - zeta * dt;
  (void)parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && n >= 8192 && !omp_in_parallel())
#endif
  for (int i = 1; i <= n; ++i) {
    const int k = st.idx[i - 1];
    const double wi = st.w[i - 1];
    const double uin = (1.0 - wi) * cur[k] + wi * cur[k + 1];
    nxt[i] = keep * cur[i] + a * (cur[i - 1] + cur[i + 1]) + zeta * dt * F(uin);
  }
}

}  // namespace detail

// Single step of u_t = (1/2)u_xx + zeta [F(u(./gamma)) - u] with Dirichlet
// data (bc_left at the origin, bc_right at L). Throws on CFL violation.
Field step_nonlocal(const Field& f, const Nonlinearity& F, const SolverConfig& cfg);
Field step_nonlocal(const Field& f, const std::function<double(double)>& F, double lipschitz,
                    const SolverConfig& cfg);

std::vector<Field> solve_cauchy(const Nonlinearity& F, const SolverConfig& cfg, const Grid& g,
                                const std::vector<double>& snapshot_times);

struct SteadyResult {
  Field field;
  bool converged = false;
  double rate = 0.0;      // last max |du|/dt
  double t_reached = 0.0;
};

// March from u=1 until max |du|/dt < steady_tol; monotone decrease makes the
// iteration convergent and any early stop an upper bound on the steady state.
SteadyResult steady_state(const Nonlinearity& F, const SolverConfig& cfg, const Grid& g);

// Discrete elliptic residual (1/2)D2 U + zeta [F(U(./gamma)) - U].
std::vector<double> residual_nonlocal(const Field& f, const Nonlinearity& F,
                                      const SolverConfig& cfg);

// One step of the local comparison model
//   u_t = (1/2) e^{-2 nu t} u_xx - (b - nu) x u_x + zeta f(u)
// with u(0)=0 at the origin, Dirichlet 1 on the right, upwind advection and
// midpoint-time diffusion coefficient. lipschitz_f bounds |f'| on [0,1].
Field step_local_model(const Field& f, const std::function<double(double)>& f_reaction,
                       double lipschitz_f, double nu, double b, const SolverConfig& cfg);

double local_model_auto_dt(const Grid& g, const SolverConfig& cfg, double lipschitz_f, double nu,
                           double b, double t);

}  // namespace abb
