#include "abb/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace abb {

namespace {

constexpr double kDomainTol = 1e-12;

void check_u(double u) {
  if (std::abs(u) > 1.0 + kDomainTol)
    throw std::domain_error("F argument outside [-1,1]: " + std::to_string(u));
}

double clamp_u(double u) { return std::clamp(u, -1.0, 1.0); }

// Golden-section maximization on [a,b]; fn assumed unimodal near the optimum.
template <class Fn>
double golden_max(Fn&& fn, double a, double b, int iters = 120) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int i = 0; i < iters && b - a > 1e-14; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  return std::max(fc, fd);
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  if (n <= 60) {
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return static_cast<double>(r);
  }
  return std::exp(log_binomial(n, k));
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Both eval paths write F as 2 * sum_n p_n sum_j c_{n,j} p^j q^{n-j} - 1 with
// p=(1+u)/2, q=(1-u)/2 and c_{n,j} = C(n,j) * sum_{k<=j} eta_{n,k}: the
// binomial tail reorganized as one positive-term polynomial (no cancellation).
double eval_F(const VotingRule& rule, double u) {
  check_u(u);
  u = clamp_u(u);
  const double p = 0.5 * (1.0 + u);
  const double q = 0.5 * (1.0 - u);
  double acc = 0.0;
  for (std::size_t a = 0; a < rule.arities.size(); ++a) {
    const int n = rule.arities[a];
    const auto& ec = rule.eta_cum[a];
    double sum = 0.0;
    if (n <= 250) {
      // explicit power tables; every term is in [0,1], no overflow possible
      double pw_p[251], pw_q[251];
      pw_p[0] = 1.0;
      pw_q[0] = 1.0;
      for (int j = 1; j <= n; ++j) {
        pw_p[j] = pw_p[j - 1] * p;
        pw_q[j] = pw_q[j - 1] * q;
      }
      for (int j = 1; j <= n; ++j) sum += ec[j - 1] * binomial(n, j) * pw_p[j] * pw_q[n - j];
    } else {
      for (int j = 1; j <= n; ++j) {
        double lt = log_binomial(n, j) + j * std::log(p) + (n - j) * std::log(q);
        sum += ec[j - 1] * std::exp(lt);
      }
    }
    acc += rule.arity_prob[a] * sum;
  }
  return 2.0 * acc - 1.0;
}

// F'(u) = sum_n p_n sum_k eta_{n,k} (n-k+1) C(n,k-1) p^{k-1} q^{n-k}; the
// 2^{1-n} of the display cancels against (1+u)=2p, (1-u)=2q.
double eval_F_prime(const VotingRule& rule, double u) {
  check_u(u);
  u = clamp_u(u);
  const double p = 0.5 * (1.0 + u);
  const double q = 0.5 * (1.0 - u);
  double acc = 0.0;
  for (std::size_t a = 0; a < rule.arities.size(); ++a) {
    const int n = rule.arities[a];
    const auto& e = rule.eta[a];
    double sum = 0.0;
    for (int k = 1; k <= n; ++k) {
      if (e[k - 1] == 0.0) continue;
      double term;
      if (n <= 250) {
        term = binomial(n, k - 1) * std::pow(p, k - 1) * std::pow(q, n - k);
      } else {
        if ((p == 0.0 && k > 1) || (q == 0.0 && k < n)) {
          term = 0.0;
        } else {
          term = std::exp(log_binomial(n, k - 1) + (k - 1) * std::log(std::max(p, 1e-300)) +
                          (n - k) * std::log(std::max(q, 1e-300)));
        }
      }
      sum += e[k - 1] * (n - k + 1) * term;
    }
    acc += rule.arity_prob[a] * sum;
  }
  return acc;
}

double fprime0_majority_closed_form(const std::map<int, double>& pmf) {
  double acc = 0.0;
  for (const auto& [n, p] : pmf) {
    if (n < 1) throw std::invalid_argument("arity must be >= 1");
    double term;
    if (n <= 60) {
      term = std::exp2(1.0 - n) * ((n + 1) / 2) * binomial(n, n / 2);
    } else {
      term = ((n + 1) / 2) * std::exp((1.0 - n) * std::numbers::ln2 + log_binomial(n, n / 2));
    }
    acc += p * term;
  }
  return acc;
}

XiResult fixed_point_xi(const std::function<double(double)>& fn, double fprime0) {
  constexpr int kGrid = 20000;
  constexpr double kZeroTol = 1e-12;
  const auto g = [&](double v) { return fn(v) - v; };

  XiResult res;
  // diagnostics: every sign change of g on the grid
  double prev_v = 1.0 / kGrid, prev_g = g(prev_v);
  for (int i = 2; i <= kGrid; ++i) {
    double v = static_cast<double>(i) / kGrid;
    double gv = g(v);
    if ((prev_g > kZeroTol && gv <= kZeroTol) || (prev_g <= -kZeroTol && gv > kZeroTol)) {
      double lo = prev_v, hi = v;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if ((g(mid) <= kZeroTol) == (gv <= kZeroTol))
          hi = mid;
        else
          lo = mid;
      }
      res.crossings.push_back(0.5 * (lo + hi));
    }
    prev_v = v;
    prev_g = gv;
  }

  // infimum of {v > 0 : g(v) <= 0}
  double first_v = 1.0 / kGrid;
  if (g(first_v) <= kZeroTol) {
    // probably the whole right neighborhood of 0; confirm geometrically
    bool all_below = fprime0 <= 1.0 + 1e-9;
    double v = first_v;
    for (int it = 0; it < 40 && v > 1e-14; ++it) {
      v *= 0.5;
      if (g(v) > kZeroTol) {
        all_below = false;
        break;
      }
    }
    if (all_below || g(1e-14) <= kZeroTol) {
      res.value = 0.0;
      return res;
    }
  }

  int first_idx = -1;
  for (int i = 1; i <= kGrid; ++i) {
    if (g(static_cast<double>(i) / kGrid) <= kZeroTol) {
      first_idx = i;
      break;
    }
  }
  if (first_idx < 0) {
    res.value = 1.0;  // g(1)=0 analytically; grid noise only
    return res;
  }
  double lo = (first_idx - 1) / static_cast<double>(kGrid);
  double hi = first_idx / static_cast<double>(kGrid);
  if (first_idx == 1) lo = 1e-14;
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) <= kZeroTol)
      hi = mid;
    else
      lo = mid;
  }
  res.value = hi;

  // tangential contact: g stays ~0 on a right neighborhood of the contact
  int flat = 0;
  for (int j = 1; j <= 8; ++j) {
    double v = res.value + j * 1e-4;
    if (v <= 1.0 && std::abs(g(v)) <= 1e-11) ++flat;
  }
  res.tangential = flat >= 8;
  return res;
}

double upsilon(const std::function<double(double)>& fn, double fprime0) {
  constexpr int kGrid = 20000;
  const auto r = [&](double v) { return fn(v) / v; };
  double best = fprime0;  // v -> 0 limit
  int best_i = 0;
  for (int i = 1; i <= kGrid; ++i) {
    double v = static_cast<double>(i) / kGrid;
    double rv = r(v);
    if (rv > best) {
      best = rv;
      best_i = i;
    }
  }
  if (best_i > 0) {
    double a = std::max(1e-12, (best_i - 1) / static_cast<double>(kGrid));
    double b = std::min(1.0, (best_i + 1) / static_cast<double>(kGrid));
    best = std::max(best, golden_max(r, a, b));
  }
  return best;
}

SigmaResult sigma(double f, double gamma) {
  if (f <= 1.0) throw std::invalid_argument("sigma requires f > 1");
  if (gamma <= 1.0) throw std::invalid_argument("sigma requires gamma > 1");
  constexpr int kGrid = 10000;
  const double lg = std::log(gamma);
  const auto s = [&](double w) { return (1.0 - f * std::exp(-w * lg)) / w; };
  double best = s(1.0);  // omega=1 endpoint exactly on the grid
  double best_w = 1.0;
  for (int i = 1; i < kGrid; ++i) {
    double w = static_cast<double>(i) / kGrid;
    double sw = s(w);
    if (sw > best) {
      best = sw;
      best_w = w;
    }
  }
  double a = std::max(1e-9, best_w - 1.0 / kGrid);
  double b = std::min(1.0, best_w + 1.0 / kGrid);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = s(c), fd = s(d);
  while (b - a > 1e-13) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = s(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = s(d);
    }
  }
  double w = 0.5 * (a + b);
  SigmaResult out;
  if (s(w) > best) {
    out.value = s(w);
    out.omega = w;
  } else {
    out.value = best;
    out.omega = best_w;
  }
  return out;
}

bool kpp_check(const std::function<double(double)>& fn, double fprime0) {
  constexpr int kGrid = 10000;
  for (int i = 0; i <= kGrid; ++i) {
    double v = static_cast<double>(i) / kGrid;
    if (fn(v) > fprime0 * v + 1e-10) return false;
  }
  return true;
}

double stirling_ratio(int n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("stirling_ratio needs even n >= 2");
  double log_term = (1.0 - n) * std::numbers::ln2 + std::log(n / 2.0 + 0.0) +
                    log_binomial(n, n / 2);
  // ceil(n/2) = n/2 for even n; the log of it was added above
  return std::exp(log_term) / std::sqrt(2.0 * n / std::numbers::pi);
}

Nonlinearity::Nonlinearity(VotingRule rule) : rule_(std::move(rule)) {
  if (rule_.arities.empty()) rule_.finalize();
  const auto fn = [this](double u) { return eval_F(rule_, u); };
  Fprime0 = eval_F_prime(rule_, 0.0);
  Upsilon = upsilon(fn, Fprime0);
  is_kpp = kpp_check(fn, Fprime0);
  if (rule_.odd_symmetric) {
    XiResult xr = fixed_point_xi(fn, Fprime0);
    Xi = xr.value;
    xi_tangential = xr.tangential;
  } else {
    Xi = std::numeric_limits<double>::quiet_NaN();
  }
  // sup of F' on [0,1]: grid max plus golden refinement around the argmax
  constexpr int kGrid = 4000;
  double best = 0.0;
  int best_i = 0;
  for (int i = 0; i <= kGrid; ++i) {
    double v = static_cast<double>(i) / kGrid;
    double d = eval_F_prime(rule_, v);
    if (d > best) {
      best = d;
      best_i = i;
    }
  }
  double a = std::max(0.0, (best_i - 1) / static_cast<double>(kGrid));
  double b = std::min(1.0, (best_i + 1) / static_cast<double>(kGrid));
  lipschitz_bound =
      std::max(best, golden_max([this](double v) { return eval_F_prime(rule_, v); }, a, b));
}

SpeedPair speeds(const Nonlinearity& F, double zeta, double gamma) {
  if (!(F.Fprime0 > 1.0))
    throw std::invalid_argument("speeds requires F'(0) > 1, got " + std::to_string(F.Fprime0));
  if (!(zeta > 0.0)) throw std::invalid_argument("speeds requires zeta > 0");
  SpeedPair sp;
  sp.zeta = zeta;
  sp.gamma = gamma;
  sp.c_under = zeta * sigma(F.Upsilon, gamma).value;
  sp.c_over = zeta * sigma(F.Fprime0, gamma).value;
  return sp;
}

}  // namespace abb
