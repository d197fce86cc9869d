#include "abb/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace abb {

namespace {

// Tail helper h on [0, 1/2]: h'' = kv (piecewise linear), so h' is the
// nodal integral plus a quadratic tail and h a cubic tail within the cell.
struct TailEval {
  double h, d1, d2;
};

TailEval tail_at(const HFunction& H, double y) {
  const int m = static_cast<int>(H.kv.size());
  double yc = std::clamp(y, 0.0, 0.5);
  int j = std::min(static_cast<int>(yc / H.dz), m - 2);
  const double s = yc - j * H.dz;
  const double slope = (H.kv[j + 1] - H.kv[j]) / H.dz;
  TailEval e;
  e.d2 = H.kv[j] + slope * s;
  e.d1 = H.I1[j] + H.kv[j] * s + 0.5 * slope * s * s;
  e.h = H.I2[j] + H.I1[j] * s + 0.5 * H.kv[j] * s * s + slope * s * s * s / 6.0;
  return e;
}

double quintic_eval(const std::array<double, 6>& c, double s) {
  double r = c[5];
  for (int k = 4; k >= 0; --k) r = r * s + c[k];
  return r;
}

double quintic_d1(const std::array<double, 6>& c, double s) {
  double r = 5.0 * c[5];
  for (int k = 4; k >= 1; --k) r = r * s + k * c[k];
  return r;
}

double quintic_d2(const std::array<double, 6>& c, double s) {
  double r = 20.0 * c[5];
  for (int k = 4; k >= 2; --k) r = r * s + k * (k - 1) * c[k];
  return r;
}

}  // namespace

double HFunction::eval(double u) const {
  const double un = std::clamp(u / Xi, 0.0, 1.0);
  if (un <= knot_lin) return f_slope * un * Xi;
  if (un < 0.5) {
    const double L = 0.5 - knot_lin;
    return Xi * quintic_eval(quintic, (un - knot_lin) / L);
  }
  const TailEval e = tail_at(*this, 1.0 - un);
  return Xi * (e.h + un);
}

double HFunction::d1(double u) const {
  const double un = std::clamp(u / Xi, 0.0, 1.0);
  if (un <= knot_lin) return f_slope;
  if (un < 0.5) {
    const double L = 0.5 - knot_lin;
    return quintic_d1(quintic, (un - knot_lin) / L) / L;
  }
  return 1.0 - tail_at(*this, 1.0 - un).d1;
}

double HFunction::d2(double u) const {
  const double un = std::clamp(u / Xi, 0.0, 1.0);
  if (un <= knot_lin) return 0.0;
  if (un < 0.5) {
    const double L = 0.5 - knot_lin;
    return quintic_d2(quintic, (un - knot_lin) / L) / (L * L * Xi);
  }
  return tail_at(*this, 1.0 - un).d2 / Xi;
}

int PiecewiseFn::piece_index(double x) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  int i = static_cast<int>(it - breakpoints.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(pieces.size()) - 1);
}

namespace {

struct Jet {
  double v, d1, d2;
};

Jet piece_jet(const PiecewiseFn& fn, double x, bool with_derivs);

Jet eval_piece(const Piece& p, double x, bool with_derivs) {
  switch (p.kind) {
    case Piece::Kind::linear:
      return {p.a * x + p.c, p.a, 0.0};
    case Piece::Kind::power: {
      const double xp = std::pow(x, p.omega);
      Jet j{p.a * xp + p.c, 0.0, 0.0};
      if (with_derivs && x > 0.0) {
        j.d1 = p.a * p.omega * xp / x;
        j.d2 = p.a * p.omega * (p.omega - 1.0) * xp / (x * x);
      } else if (with_derivs) {
        // power pieces never start at 0 unless omega >= 1
        j.d1 = p.omega == 1.0 ? p.a : 0.0;
        j.d2 = 0.0;
      }
      return j;
    }
    case Piece::Kind::scaled_ref: {
      Jet in = piece_jet(*p.ref, p.arg_scale * x, with_derivs);
      return {p.val_scale * in.v, p.val_scale * p.arg_scale * in.d1,
              p.val_scale * p.arg_scale * p.arg_scale * in.d2};
    }
    case Piece::Kind::h_iter: {
      const double scale = std::pow(p.contraction, p.depth);
      Jet j = piece_jet(*p.base, scale * x, with_derivs);
      j.d1 *= scale;
      j.d2 *= scale * scale;
      for (int k = 0; k < p.depth; ++k) {
        const double hd1 = p.H->d1(j.v);
        if (with_derivs) {
          const double hd2 = p.H->d2(j.v);
          j.d2 = hd2 * j.d1 * j.d1 + hd1 * j.d2;
        }
        j.d1 = hd1 * j.d1;  // per-level chain factor is in scale already
        j.v = p.H->eval(j.v);
      }
      return j;
    }
  }
  return {0.0, 0.0, 0.0};
}

Jet piece_jet(const PiecewiseFn& fn, double x, bool with_derivs) {
  const double lo = fn.x_min(), hi = fn.x_max();
  const double slack = 1e-9 * std::max(1.0, std::abs(hi));
  if (x < lo - slack || x > hi + slack)
    throw std::domain_error("piecewise eval outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "] at x=" + std::to_string(x));
  const double xc = std::clamp(x, lo, hi);
  return eval_piece(fn.pieces[fn.piece_index(xc)], xc, with_derivs);
}

}  // namespace

double PiecewiseFn::eval(double x) const { return piece_jet(*this, x, false).v; }
double PiecewiseFn::d1(double x) const { return piece_jet(*this, x, true).d1; }
double PiecewiseFn::d2(double x) const { return piece_jet(*this, x, true).d2; }

void PiecewiseFn::validate() const {
  if (breakpoints.size() != pieces.size() + 1 || pieces.empty())
    throw std::runtime_error("piecewise: breakpoints must bracket the pieces");
  for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i] < breakpoints[i + 1]))
      throw std::runtime_error("piecewise: breakpoints must increase");
  for (size_t i = 1; i < pieces.size(); ++i) {
    const double b = breakpoints[i];
    const Jet left = eval_piece(pieces[i - 1], b, true);
    const Jet right = eval_piece(pieces[i], b, true);
    const double vtol = 1e-10 * std::max(1.0, std::abs(left.v));
    if (std::abs(left.v - right.v) > vtol) {
      std::ostringstream os;
      os << "piecewise: discontinuity at breakpoint " << b << " (" << left.v << " vs " << right.v
         << ")";
      throw std::runtime_error(os.str());
    }
    const double dtol = 1e-12 * std::max(1.0, std::abs(left.d1));
    if (!(left.d1 < right.d1 + dtol)) {
      std::ostringstream os;
      os << "piecewise: downward derivative jump at " << b << " (" << left.d1 << " -> " << right.d1
         << ")";
      throw std::runtime_error(os.str());
    }
  }
}

}  // namespace abb
