#include "abb/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace abb {

namespace {

struct MinTrack {
  double value = std::numeric_limits<double>::infinity();
  double arg = 0.0;

  void feed(double v, double x) {
    if (v < value) {
      value = v;
      arg = x;
    }
  }
};

}  // namespace

CertificateReport check_supersolution(double delta, double xi, double omega,
                                      const Nonlinearity& F, double zeta, double gamma,
                                      const std::vector<double>& x_grid) {
  if (!(omega > 0.0) || omega > 1.0) throw std::domain_error("supersolution needs omega in (0,1]");
  if (x_grid.empty()) throw std::invalid_argument("supersolution needs a nonempty grid");
  for (double x : x_grid)
    if (!(x > 0.0)) throw std::invalid_argument("supersolution grid must be positive");
  if (!(xi > 0.0)) throw std::invalid_argument("supersolution needs xi > 0");

  const double gpow = std::pow(gamma, -omega);
  MinTrack mt;
  for (double x : x_grid) {
    const double v = xi * std::pow(x, omega);
    const double lap = omega * (omega - 1.0) * v / (x * x);
    const double linear_gap = zeta * (F.Upsilon * gpow - 1.0) * v;
    mt.feed(-delta * v - 0.5 * lap - linear_gap, x);
    for (double t : {0.0, 1.0, 5.0}) {
      const double decay = std::exp(-delta * t);
      const double arg = decay * v * gpow;
      if (arg > 1.0) continue;  // exact F defined on [-1,1] only
      const double resid =
          -delta * decay * v - 0.5 * decay * lap - zeta * (F(arg) - decay * v);
      mt.feed(resid, x);
    }
  }
  CertificateReport r;
  r.min_residual = mt.value;
  r.argmin_x = mt.arg;
  r.grid_size = static_cast<int>(x_grid.size());
  r.passed = mt.value >= -kCertTol;
  return r;
}

// ---------------------------------------------------------------------------
// H construction

HFunction build_H(const Nonlinearity& F, double Xi, double f) {
  if (!(Xi > 0.0)) throw std::invalid_argument("build_H needs Xi > 0");
  if (!(F.Fprime0 > 1.0)) throw std::invalid_argument("build_H needs F'(0) > 1");
  if (!(f > 1.0 && f < F.Fprime0))
    throw std::invalid_argument("build_H needs f in (1, F'(0))");

  auto G = [&](double un) { return F(Xi * un) / Xi; };
  if (std::abs(G(1.0) - 1.0) > 1e-9)
    throw std::invalid_argument("build_H: Xi is not a fixed point of F");

  HFunction H;
  H.Xi = Xi;
  H.f_slope = f;

  // Convex tail: kv = running min of G(1-y)-(1-y) over [y, 1/2], integrated
  // twice exactly as a piecewise-linear function of y.
  const int m = 8193;
  H.dz = 0.5 / (m - 1);
  H.kv.assign(m, 0.0);
  double run = std::numeric_limits<double>::infinity();
  for (int i = m - 1; i >= 0; --i) {
    const double y = i * H.dz;
    run = std::min(run, G(1.0 - y) - (1.0 - y));
    H.kv[i] = std::max(run, 0.0);
  }
  H.I1.assign(m, 0.0);
  H.I2.assign(m, 0.0);
  for (int i = 0; i + 1 < m; ++i) {
    H.I1[i + 1] = H.I1[i] + 0.5 * (H.kv[i] + H.kv[i + 1]) * H.dz;
    H.I2[i + 1] = H.I2[i] + H.dz * (H.I1[i] + H.dz * (H.kv[i] / 3.0 + H.kv[i + 1] / 6.0));
  }
  // h'(1/2) < 1 keeps the tail increasing (analysis gives <= 1/4).
  if (!(H.I1.back() < 0.5))
    throw std::runtime_error("build_H: tail integral too large, H1 not increasing");

  // Linear run: largest u with f*u < G(u) on (0, pivot], with margin.
  const int scan_n = 20000;
  double delta2 = 0.45;
  for (int i = 1; i <= scan_n; ++i) {
    const double u = 0.5 * i / scan_n;
    if (G(u) - f * u <= 0.0) {
      delta2 = 0.9 * u;
      break;
    }
  }
  if (!(delta2 > 1e-4)) {
    std::ostringstream os;
    os << "build_H: no linear run found for f=" << f << " against F'(0)=" << F.Fprime0
       << " at scan resolution " << 0.5 / scan_n;
    throw std::runtime_error(os.str());
  }
  double knot0 = delta2 / f;

  // Tail-side quintic endpoint data at u = 1/2.
  const double h_half = H.I2.back();
  const double hp_half = H.I1.back();
  const double v1 = h_half + 0.5;
  const double d1r = 1.0 - hp_half;
  const double s1 = H.kv.back();  // second derivative continues the tail's k(1/2)

  // Knot ladder: shrink the linear run until the bridge stays monotone and
  // inside the (u, G) corridor.
  const int probe_n = 4001;
  bool ok = false;
  std::string last_fail;
  for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
    const double knot = knot0 * std::pow(0.75, attempt);
    if (knot < 1e-5) break;
    const double L = 0.5 - knot;
    const double v0 = f * knot;
    const double c0 = v0, c1 = f * L, c2 = 0.0;
    const double A = v1 - (c0 + c1 + c2);
    const double Bv = d1r * L - (c1 + 2.0 * c2);
    const double Cv = s1 * L * L - 2.0 * c2;
    H.quintic = {c0, c1, c2, 10.0 * A - 4.0 * Bv + 0.5 * Cv, -15.0 * A + 7.0 * Bv - Cv,
                 6.0 * A - 3.0 * Bv + 0.5 * Cv};
    H.knot_lin = knot;

    ok = true;
    for (int i = 0; i <= probe_n && ok; ++i) {
      const double u = knot + (0.5 - knot) * i / probe_n;
      const double hu = H.eval(Xi * u) / Xi;
      if (!(hu > u)) {
        ok = false;
        last_fail = "bridge touches the diagonal";
      } else if (hu > G(u) + 1e-12) {
        ok = false;
        last_fail = "bridge exceeds G";
      } else if (!(H.d1(Xi * u) > 0.0)) {
        ok = false;
        last_fail = "bridge not increasing";
      }
    }
  }
  if (!ok) {
    std::ostringstream os;
    os << "build_H: quintic bridge failed for f=" << f << " (" << last_fail
       << " at final knot " << H.knot_lin << ")";
    throw std::runtime_error(os.str());
  }
  H.delta = H.knot_lin * Xi;

  // Full-domain validation with reported margins.
  const int val_n = 10000;
  double ml = std::numeric_limits<double>::infinity();
  double mu = ml;
  for (int i = 1; i < val_n; ++i) {
    const double un = static_cast<double>(i) / val_n;
    const double u = Xi * un;
    const double hu = H.eval(u);
    ml = std::min(ml, hu - u);
    mu = std::min(mu, Xi * G(un) - hu);
    if (!(H.d1(u) > 0.0)) throw std::runtime_error("build_H: H' <= 0 on validation grid");
    if (un > 0.5 && H.d2(u) < -1e-10)
      throw std::runtime_error("build_H: tail convexity violated");
  }
  if (!(ml > 0.0) || mu < -1e-12) {
    std::ostringstream os;
    os << "build_H: sandwich u < H <= F violated (margins " << ml << ", " << mu << ")";
    throw std::runtime_error(os.str());
  }
  H.margin_lower = ml;
  H.margin_upper = mu;
  return H;
}

// ---------------------------------------------------------------------------
// v_omega descent

namespace {

// Verifies 0 <= f v(Bx) - v(x) + nu x v'(x) on an offset grid of [0,1].
void verify_v_level(const PiecewiseFn& v, double B, double f, double nu, double omega) {
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    const double r = f * v.eval(B * x) - v.eval(x) + nu * x * v.d1(x);
    if (r < -kCertTol) {
      std::ostringstream os;
      os << "v_omega descent: inequality violated at omega=" << omega << ", x=" << x
         << " (residual " << r << ")";
      throw std::runtime_error(os.str());
    }
  }
}

}  // namespace

VOmega build_v_omega(double B, double f, double nu_over_zeta, double alpha,
                     double omega_target) {
  if (!(B > 0.0 && B < 1.0)) throw std::invalid_argument("build_v_omega needs B in (0,1)");
  if (!(f > 1.0)) throw std::invalid_argument("build_v_omega needs f > 1");
  if (nu_over_zeta < 0.0) throw std::invalid_argument("build_v_omega needs nu >= 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("build_v_omega needs alpha in (0,1)");
  if (!(omega_target > 0.0) || omega_target > 1.0)
    throw std::invalid_argument("build_v_omega needs omega_target in (0,1]");

  double kappa = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 2000; ++i) {
    const double om = static_cast<double>(i) / 2000;
    kappa = std::min(kappa, f * std::pow(B, om) - 1.0 + nu_over_zeta * om);
  }
  if (!(kappa > 0.0)) {
    std::ostringstream os;
    os << "build_v_omega: kappa = " << kappa << " <= 0 for f=" << f << ", B=" << B
       << ", nu/zeta=" << nu_over_zeta;
    throw std::invalid_argument(os.str());
  }
  const double alpha_floor = std::cbrt(std::max(0.0, 1.0 - kappa / (f - 1.0)));
  if (!(alpha > alpha_floor)) {
    std::ostringstream os;
    os << "build_v_omega: alpha=" << alpha << " must exceed " << alpha_floor;
    throw std::invalid_argument(os.str());
  }

  VOmega cur;
  {
    auto base = std::make_shared<PiecewiseFn>();
    base->breakpoints = {0.0, 1.0};
    Piece id;
    id.kind = Piece::Kind::linear;
    id.a = 1.0;
    id.c = 0.0;
    base->pieces = {id};
    cur.fn = base;
    cur.omega = 1.0;
    cur.m_omega = 1.0;
  }
  verify_v_level(*cur.fn, B, f, nu_over_zeta, cur.omega);
  if (omega_target >= 1.0) return cur;

  while (cur.omega > omega_target) {
    const double om2 = alpha * alpha * cur.omega;
    const double m = 0.5 * (cur.m_omega + om2 / std::pow(alpha, 3.0));

    // Rescale by M until the end slope parameter m_omega2 lands in
    // (omega2, omega2/alpha); it decreases to omega2 as M grows.
    double M = std::max(2.0, 1.0 / B);
    double m2 = 0.0;
    bool found = false;
    for (int tries = 0; tries < 200; ++tries) {
      const double Mp = std::pow(M, om2);
      m2 = om2 * Mp / (Mp - 1.0 + om2 / m);
      if (m2 > om2 && m2 < om2 / alpha) {
        found = true;
        break;
      }
      M *= 2.0;
    }
    if (!found)
      throw std::runtime_error("build_v_omega: no rescale factor M found at omega=" +
                               std::to_string(om2));

    const double tvM = (m / om2) * (std::pow(M, om2) - 1.0) + 1.0;
    auto next = std::make_shared<PiecewiseFn>();
    next->breakpoints = {0.0, 1.0 / M, 1.0};
    Piece head;
    head.kind = Piece::Kind::scaled_ref;
    head.ref = cur.fn;
    head.arg_scale = M;
    head.val_scale = 1.0 / tvM;
    Piece tail;
    tail.kind = Piece::Kind::power;
    tail.a = m2 / om2;
    tail.omega = om2;
    tail.c = 1.0 - m2 / om2;
    next->pieces = {head, tail};
    next->validate();

    VOmega stepped;
    stepped.fn = next;
    stepped.omega = om2;
    stepped.m_omega = m2;
    if (std::abs(next->eval(0.0)) > 1e-12 || std::abs(next->eval(1.0) - 1.0) > 1e-10)
      throw std::runtime_error("build_v_omega: endpoint drift");
    verify_v_level(*stepped.fn, B, f, nu_over_zeta, stepped.omega);
    cur = stepped;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Subsolution scaffold w

PiecewiseFn build_w(const HFunction& H, double B, const VOmega& v, double delta, double x_max) {
  if (!(B > 0.0 && B < 1.0)) throw std::invalid_argument("build_w needs B in (0,1)");
  if (!(delta > 0.0 && delta <= H.delta * (1.0 + 1e-12)))
    throw std::invalid_argument("build_w needs delta in (0, H.delta]");
  if (!(x_max > 1.0)) throw std::invalid_argument("build_w needs x_max > 1");

  const double f = H.f_slope;
  const double omega0 = -std::log(f) / std::log(B);
  if (!(v.m_omega < omega0) || !(v.omega < omega0)) {
    std::ostringstream os;
    os << "build_w: descent output (omega=" << v.omega << ", m_omega=" << v.m_omega
       << ") must stay below omega0=" << omega0;
    throw std::runtime_error(os.str());
  }
  // Glue condition x^{omega0} <= v(x) on [B,1]; worst case sits at x = B.
  for (int i = 0; i <= 2000; ++i) {
    const double x = B + (1.0 - B) * i / 2000;
    if (std::pow(x, omega0) > v.fn->eval(x) + 1e-12)
      throw std::runtime_error("build_w: power seed pokes above v_omega at x=" +
                               std::to_string(x));
  }

  const double seed_scale = delta * std::pow(B, omega0);  // = delta / f
  auto Hp = std::make_shared<HFunction>(H);

  PiecewiseFn w;
  w.breakpoints = {0.0, 1.0};
  Piece head;
  head.kind = Piece::Kind::scaled_ref;
  head.ref = v.fn;
  head.arg_scale = 1.0;
  head.val_scale = seed_scale;
  w.pieces = {head};

  auto power_fn = std::make_shared<PiecewiseFn>();
  power_fn->breakpoints = {1.0, 1.0 / B};
  Piece pw;
  pw.kind = Piece::Kind::power;
  pw.a = seed_scale;
  pw.omega = omega0;
  pw.c = 0.0;
  power_fn->pieces = {pw};

  w.breakpoints.push_back(1.0 / B);
  w.pieces.push_back(pw);

  const int K =
      static_cast<int>(std::ceil(std::log(x_max) / std::log(1.0 / B) - 1e-9));
  for (int k = 2; k <= K; ++k) {
    Piece hp;
    hp.kind = Piece::Kind::h_iter;
    hp.H = Hp;
    hp.base = power_fn;
    hp.contraction = B;
    hp.depth = k - 1;
    w.breakpoints.push_back(std::pow(B, -k));
    w.pieces.push_back(hp);
  }
  w.validate();

  // Increasing, capped by Xi, and monotone through the recursion ladder.
  double prev = 0.0;
  for (size_t i = 1; i < w.breakpoints.size(); ++i) {
    const double val = w.eval(w.breakpoints[i]);
    if (!(val > prev)) throw std::runtime_error("build_w: w not increasing across breakpoints");
    if (val > H.Xi + 1e-10) throw std::runtime_error("build_w: w exceeds Xi");
    prev = val;
  }
  const int probe_n = 2000;
  prev = -1.0;
  for (int i = 0; i <= probe_n; ++i) {
    const double x = w.x_max() * i / probe_n;
    const double val = w.eval(x);
    if (val < prev - 1e-12) throw std::runtime_error("build_w: w not monotone on probe grid");
    prev = std::max(prev, val);
  }
  return w;
}

CertificateReport check_subsolution_inequality(const PiecewiseFn& w, const Nonlinearity& F,
                                               double zeta, double gamma, double nu,
                                               const std::vector<double>& x_grid) {
  if (nu < 0.0) throw std::invalid_argument("check_subsolution needs nu >= 0");
  if (!(gamma >= 1.0)) throw std::invalid_argument("check_subsolution needs gamma >= 1");
  if (x_grid.empty()) throw std::invalid_argument("check_subsolution needs a grid");

  const int n = static_cast<int>(x_grid.size());
  std::vector<double> t1(n), t2(n);
  MinTrack first;
  for (int i = 0; i < n; ++i) {
    const double x = x_grid[i];
    const double wx = w.eval(x);
    const double warg = w.eval(x / gamma);
    t1[i] = zeta * (F(warg) - wx) + nu * x * w.d1(x);
    t2[i] = t1[i] + 0.5 * w.d2(x);
    first.feed(t1[i], x);
  }

  // Tail threshold: smallest grid point beyond which the second-order form
  // holds all the way out.
  int m_idx = n;
  for (int i = n - 1; i >= 0 && t2[i] >= -kCertTol; --i) m_idx = i;
  CertificateReport r;
  r.grid_size = n;
  if (m_idx == n) {
    // even the far field fails the second-order form
    r.min_residual = std::min(first.value, t2[n - 1]);
    r.argmin_x = t2[n - 1] < first.value ? x_grid[n - 1] : first.arg;
    r.m_report = std::numeric_limits<double>::infinity();
    r.passed = false;
    return r;
  }
  MinTrack tail;
  for (int i = m_idx; i < n; ++i) tail.feed(t2[i], x_grid[i]);
  r.m_report = x_grid[m_idx];
  r.min_residual = std::min(first.value, tail.value);
  r.argmin_x = tail.value < first.value ? tail.arg : first.arg;
  // The tail must cover a nontrivial far field, not just the last points.
  r.passed = first.value >= -kCertTol && tail.value >= -kCertTol &&
             r.m_report <= 0.5 * x_grid[n - 1];
  return r;
}

std::vector<double> offset_grid(const PiecewiseFn& w, int n) {
  std::vector<double> g(n);
  const double hi = w.x_max();
  for (int i = 0; i < n; ++i) g[i] = hi * (i + 0.5) / n;
  return g;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const HFunction& H) {
  return nlohmann::json{{"xi", H.Xi},
                        {"f", H.f_slope},
                        {"delta", H.delta},
                        {"knot_lin", H.knot_lin},
                        {"margin_lower", H.margin_lower},
                        {"margin_upper", H.margin_upper},
                        {"tail_nodes", H.kv.size()}};
}

namespace {

nlohmann::json piece_json(const Piece& p) {
  using Kind = Piece::Kind;
  switch (p.kind) {
    case Kind::linear:
      return {{"kind", "linear"}, {"a", p.a}, {"c", p.c}};
    case Kind::power:
      return {{"kind", "power"}, {"a", p.a}, {"omega", p.omega}, {"c", p.c}};
    case Kind::scaled_ref:
      return {{"kind", "scaled_ref"},
              {"arg_scale", p.arg_scale},
              {"val_scale", p.val_scale},
              {"ref", to_json(*p.ref)}};
    case Kind::h_iter:
      return {{"kind", "h_iter"},
              {"depth", p.depth},
              {"contraction", p.contraction},
              {"base", to_json(*p.base)}};
  }
  return {};
}

}  // namespace

nlohmann::json to_json(const PiecewiseFn& fn) {
  nlohmann::json pieces = nlohmann::json::array();
  for (const Piece& p : fn.pieces) pieces.push_back(piece_json(p));
  return nlohmann::json{{"domain", {fn.x_min(), fn.x_max()}},
                        {"breakpoints", fn.breakpoints},
                        {"pieces", pieces}};
}

nlohmann::json to_json(const CertificateReport& r) {
  return nlohmann::json{{"min_residual", r.min_residual},
                        {"argmin_x", r.argmin_x},
                        {"grid_size", r.grid_size},
                        {"passed", r.passed},
                        {"m_report", r.m_report}};
}

void write_piecewise_csv(const PiecewiseFn& fn, int samples, std::ostream& os) {
  os << "x,w(x),w'(x)\n";
  const double lo = fn.x_min(), hi = fn.x_max();
  for (int i = 0; i <= samples; ++i) {
    const double x = lo + (hi - lo) * i / samples;
    os << x << ',' << fn.eval(x) << ',' << fn.d1(x) << '\n';
  }
}

}  // namespace abb
