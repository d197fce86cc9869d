#pragma once
#include <iosfwd>
#include <memory>
#include <vector>

#include "abb/nonlinearity.hpp"
#include "abb/piecewise.hpp"
#include "json.hpp"

namespace abb {

inline constexpr double kCertTol = 1e-8;

struct CertificateReport {
  double min_residual = 0.0;
  double argmin_x = 0.0;
  int grid_size = 0;
  bool passed = false;  // min_residual >= -kCertTol
  double m_report = 0.0;  // subsolution only: tail threshold for the second-order form
};

// Residual of v(t,x) = e^{-delta t} xi x^omega as a supersolution of
// u_t = (1/2)u_xx + zeta[F(u(t,./gamma)) - u]. The grid is checked at t=0
// with F replaced by its Upsilon*u linear bound (the residual scales by
// e^{-delta t}, so t=0 decides), and with exact F at t in {0,1,5} wherever
// the scaled argument stays within [0,1].
CertificateReport check_supersolution(double delta, double xi, double omega,
                                      const Nonlinearity& F, double zeta, double gamma,
                                      const std::vector<double>& x_grid);

// Builds H below F: linear slope f up to a scanned knot, a validated quintic
// bridge (knot ladder on failure), and the convex tail from the running-min
// double integral at the Xi end.
HFunction build_H(const Nonlinearity& F, double Xi, double f);

struct VOmega {
  std::shared_ptr<const PiecewiseFn> fn;  // domain [0,1], fn(0)=0, fn(1)=1
  double omega = 1.0;
  double m_omega = 1.0;  // end slope parameter: fn = (m/omega)(x^omega-1)+1 on [B,1]
};

// Descent from v_1(x) = x, shrinking omega by alpha^2 per step until it
// reaches omega_target; every level is verified against
//   0 <= f v(Bx) - v(x) + nu_over_zeta x v'(x) on [0,1].
VOmega build_v_omega(double B, double f, double nu_over_zeta, double alpha,
                     double omega_target);

// Subsolution scaffold: delta*B^{omega0}*v(x) on [0,1], the matching power
// law up to 1/B, then w(x) = H(w(Bx)) by B-contraction into the seed region.
PiecewiseFn build_w(const HFunction& H, double B, const VOmega& v, double delta, double x_max);

// First-order form zeta[F(w(x/gamma)) - w(x)] + nu x w'(x) over the whole
// grid, and the full form with (1/2)w'' beyond the reported tail threshold.
CertificateReport check_subsolution_inequality(const PiecewiseFn& w, const Nonlinearity& F,
                                               double zeta, double gamma, double nu,
                                               const std::vector<double>& x_grid);

// n half-spacing-offset points covering (0, x_max); dodges breakpoints.
std::vector<double> offset_grid(const PiecewiseFn& w, int n);

nlohmann::json to_json(const HFunction& H);
nlohmann::json to_json(const PiecewiseFn& fn);
nlohmann::json to_json(const CertificateReport& r);

// Header `x,w(x),w'(x)`, then samples uniform over the domain.
void write_piecewise_csv(const PiecewiseFn& fn, int samples, std::ostream& os);

}  // namespace abb
