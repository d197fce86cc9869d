#pragma once
#include <functional>
#include <vector>

#include "abb/voting_rule.hpp"

namespace abb {

double binomial(int n, int k);        // exact below n=61, log-gamma above
double log_binomial(int n, int k);

double eval_F(const VotingRule& rule, double u);
double eval_F_prime(const VotingRule& rule, double u);

// F'(0) = sum_n p_n 2^{1-n} ceil(n/2) C(n, floor(n/2)) for majority rules.
double fprime0_majority_closed_form(const std::map<int, double>& pmf);

struct XiResult {
  double value = 0.0;
  bool tangential = false;          // F(v)=v held on an interval at the contact
  std::vector<double> crossings;    // all sign changes of F(v)-v found on the scan
};

// inf{v>0 : F(v) <= v} for odd F with F(1)=1; fn is F restricted to [0,1].
XiResult fixed_point_xi(const std::function<double(double)>& fn, double fprime0);

// sup_{v in (0,1]} F(v)/v, with the v->0 limit F'(0) as a candidate.
double upsilon(const std::function<double(double)>& fn, double fprime0);

struct SigmaResult {
  double value = 0.0;
  double omega = 1.0;               // maximizer
};

// sup_{omega in (0,1]} (1 - f*gamma^-omega)/omega, f>1, gamma>1.
SigmaResult sigma(double f, double gamma);

bool kpp_check(const std::function<double(double)>& fn, double fprime0);

// [2^{1-n} ceil(n/2) C(n, n/2)] / sqrt(2n/pi) for even n; tends to 1.
double stirling_ratio(int n);

struct SpeedPair {
  double c_under = 0.0;   // zeta * Sigma(Upsilon_F, gamma)
  double c_over = 0.0;    // zeta * Sigma(F'(0), gamma)
  double zeta = 0.0;
  double gamma = 0.0;
};

// Evaluable nonlinearity of one voting layer plus its derived constants.
// F(u) = sum_n 2^{1-n} p_n sum_k eta_{n,k} sum_{j>=k} C(n,j)(1+u)^j(1-u)^{n-j} - 1.
class Nonlinearity {
 public:
  explicit Nonlinearity(VotingRule rule);

  double operator()(double u) const { return eval_F(rule_, u); }
  double prime(double u) const { return eval_F_prime(rule_, u); }
  const VotingRule& rule() const { return rule_; }

  std::function<double(double)> as_fn() const {
    return [r = rule_](double u) { return eval_F(r, u); };
  }

  double Fprime0 = 0.0;
  double Xi = 0.0;                  // meaningful only when rule().odd_symmetric
  bool xi_tangential = false;
  double Upsilon = 0.0;
  bool is_kpp = false;
  double lipschitz_bound = 0.0;     // sup of F' on [0,1]

 private:
  VotingRule rule_;
};

SpeedPair speeds(const Nonlinearity& F, double zeta, double gamma);

}  // namespace abb
