#pragma once
#include <array>
#include <memory>
#include <vector>

namespace abb {

// C2 map of [0, Xi] to itself: a linear run f_slope*u near 0, a quintic
// bridge, and a tail u + h(Xi - u) whose convex part h is the double
// integral of the running minimum kv of the gap G(u)-u near the fixed
// point. All segments carry closed-form first and second derivatives.
struct HFunction {
  double Xi = 1.0;
  double f_slope = 0.0;
  double delta = 0.0;          // linear-run length; tail is convex on [Xi-delta, Xi]
  double knot_lin = 0.0;       // normalized end of the linear segment
  double margin_lower = 0.0;   // min H(u)-u on the validation grid (u units)
  double margin_upper = 0.0;   // min G(u)-H(u) on the validation grid

  // quintic bridge on [knot_lin, 1/2] normalized, power basis in
  // s = (u - knot_lin)/(1/2 - knot_lin)
  std::array<double, 6> quintic{};

  // tail tables on a uniform grid over [0, 1/2]; kv is piecewise linear,
  // I1/I2 its exact first/second cumulative integrals at the nodes
  double dz = 0.0;
  std::vector<double> kv, I1, I2;

  double eval(double u) const;
  double d1(double u) const;
  double d2(double u) const;
};

struct PiecewiseFn;

// One closed-form segment; kind selects the live fields.
//   linear      a*x + c
//   power       a*x^omega + c
//   scaled_ref  val_scale * ref(arg_scale * x)
//   h_iter      H composed depth times onto base(contraction^depth * x)
struct Piece {
  enum class Kind { linear, power, scaled_ref, h_iter };
  Kind kind = Kind::linear;
  double a = 0.0, c = 0.0, omega = 1.0;
  std::shared_ptr<const PiecewiseFn> ref;
  double arg_scale = 1.0, val_scale = 1.0;
  std::shared_ptr<const HFunction> H;
  std::shared_ptr<const PiecewiseFn> base;
  double contraction = 1.0;
  int depth = 0;
};

// Increasing breakpoints b0 < ... < bK delimiting K pieces; domain [b0, bK].
// Derivatives are exact per piece, chained through references.
struct PiecewiseFn {
  std::vector<double> breakpoints;
  std::vector<Piece> pieces;

  double x_min() const { return breakpoints.front(); }
  double x_max() const { return breakpoints.back(); }
  int piece_index(double x) const;

  double eval(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  // Continuity within 1e-10 at every breakpoint and subsolution-oriented
  // derivative jumps f'(x-) < f'(x+) + 1e-12. Throws std::runtime_error.
  void validate() const;
};

}  // namespace abb
