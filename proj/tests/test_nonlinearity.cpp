#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "abb/nonlinearity.hpp"
#include "doctest.h"
#include "rule_family.hpp"

using namespace abb;
using abb_test::point_rule;
using abb_test::rule_family;

namespace {

// Direct enumeration of child vote configurations; shares no code with the
// binomial-tail evaluation under test.
double oracle_F(const VotingRule& r, double u) {
  const double p = 0.5 * (1.0 + u), q = 0.5 * (1.0 - u);
  double total = 0.0;
  for (const auto& [n, pn] : r.offspring_pmf) {
    if (pn == 0.0) continue;
    const auto& row = r.thresholds.at(n);
    double pv = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      const int plus = std::popcount(mask);
      const double w = std::pow(p, plus) * std::pow(q, n - plus);
      double vote_prob = 0.0;
      for (int k = 1; k <= plus; ++k) vote_prob += row[k - 1];
      pv += w * vote_prob;
    }
    total += pn * (2.0 * pv - 1.0);
  }
  return total;
}

}  // namespace

TEST_CASE("binomial table is exact in the integer range and continuous past it") {
  const double row10[11] = {1, 10, 45, 120, 210, 252, 210, 120, 45, 10, 1};
  for (int k = 0; k <= 10; ++k) CHECK(binomial(10, k) == row10[k]);
  CHECK(binomial(0, 0) == 1.0);
  CHECK(binomial(60, 1) == 60.0);
  // Pascal recurrence across the exact/log-gamma boundary
  const double lhs = binomial(62, 31);
  const double rhs = binomial(60, 29) + 2.0 * binomial(60, 30) + binomial(60, 31);
  CHECK(std::abs(lhs - rhs) / rhs < 1e-12);
}

TEST_CASE("voting nonlinearity matches exhaustive child-vote enumeration") {
  auto fam = rule_family();
  double worst = 0.0;
  for (const auto& r : fam)
    for (int i = 0; i <= 100; ++i) {
      const double u = -1.0 + 0.02 * i;
      worst = std::max(worst, std::abs(eval_F(r, u) - oracle_F(r, u)));
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("endpoints, oddness, monotonicity across the rule family") {
  auto fam = rule_family();
  for (const auto& r : fam) {
    CHECK(std::abs(eval_F(r, 1.0) - 1.0) <= 1e-14);
    CHECK(std::abs(eval_F(r, -1.0) + 1.0) <= 1e-14);
    for (int i = 0; i <= 40; ++i) {
      const double u = -1.0 + 0.05 * i;
      CHECK(eval_F_prime(r, u) >= -1e-12);
      if (r.odd_symmetric) CHECK(std::abs(eval_F(r, u) + eval_F(r, -u)) <= 1e-13);
    }
  }
}

TEST_CASE("derivative agrees with central differences") {
  auto fam = rule_family();
  const double h = 1e-6;
  for (const auto& r : fam)
    for (int i = 1; i < 13; ++i) {
      const double u = -0.96 + i * 0.15;
      const double fd = (eval_F(r, u + h) - eval_F(r, u - h)) / (2.0 * h);
      CHECK(std::abs(eval_F_prime(r, u) - fd) <= 1e-7);
    }
}

TEST_CASE("slope at the origin for majority rules") {
  CHECK(eval_F_prime(majority_rule({{3, 1.0}}), 0.0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(eval_F_prime(majority_rule({{5, 1.0}}), 0.0) == doctest::Approx(1.875).epsilon(1e-12));
  CHECK(fprime0_majority_closed_form({{3, 1.0}}) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fprime0_majority_closed_form({{5, 1.0}}) == doctest::Approx(1.875).epsilon(1e-12));
  CHECK(fprime0_majority_closed_form({{2, 0.3}, {4, 0.7}}) ==
        doctest::Approx(1.35).epsilon(1e-12));
  for (const auto& pmf :
       std::vector<std::map<int, double>>{{{3, 1.0}}, {{2, 0.3}, {4, 0.7}}, {{1, 0.5}, {5, 0.5}}})
    CHECK(fprime0_majority_closed_form(pmf) ==
          doctest::Approx(eval_F_prime(majority_rule(pmf), 0.0)).epsilon(1e-11));
}

TEST_CASE("large-arity evaluation stays on the log path without blowing up") {
  auto big = majority_rule({{400, 1.0}});
  const double d0 = eval_F_prime(big, 0.0);
  CHECK(d0 == doctest::Approx(fprime0_majority_closed_form({{400, 1.0}})).epsilon(1e-9));
  for (double u : {-0.999, -0.5, 0.0, 0.25, 0.999}) {
    const double v = eval_F(big, u);
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) <= 1.0 + 1e-12);
  }
  CHECK(eval_F(big, 0.5) > 0.99);  // steep majority threshold
  CHECK(std::abs(eval_F(big, 0.0)) < 1e-12);
}

TEST_CASE("even-majority slope approaches its asymptotic rate from below") {
  CHECK(stirling_ratio(2) == doctest::Approx(0.886226925452758).epsilon(1e-12));
  const double r10 = stirling_ratio(10), r50 = stirling_ratio(50), r400 = stirling_ratio(400);
  CHECK(r10 < r50);
  CHECK(r50 < r400);
  CHECK(r400 < 1.0);
  CHECK(r400 > 0.999);
  CHECK(std::abs(r50 - 1.0) < 0.006);
  CHECK_THROWS(stirling_ratio(3));
  CHECK_THROWS(stirling_ratio(0));
}

TEST_CASE("fixed point of F(v)=v on (0,1]") {
  auto maj3 = Nonlinearity(majority_rule({{3, 1.0}}));
  auto xi = fixed_point_xi(maj3.as_fn(), maj3.Fprime0);
  CHECK(xi.value == doctest::Approx(1.0).epsilon(1e-8));

  // 0.9 id + 0.1 majority-3: F - v = 0.05 v (1 - v^2), still touching only at 1
  auto mix = Nonlinearity(majority_rule({{1, 0.9}, {3, 0.1}}));
  CHECK(fixed_point_xi(mix.as_fn(), mix.Fprime0).value == doctest::Approx(1.0).epsilon(1e-8));

  // identity rule: contact immediately right of 0
  auto id = Nonlinearity(point_rule(1, 1));
  CHECK(fixed_point_xi(id.as_fn(), id.Fprime0).value == 0.0);

  // strict-consensus rule pulls below the diagonal near 0
  auto unan = Nonlinearity(point_rule(3, 3));
  CHECK(fixed_point_xi(unan.as_fn(), unan.Fprime0).value == 0.0);
}

TEST_CASE("growth envelope sup F(v)/v") {
  auto maj3 = Nonlinearity(majority_rule({{3, 1.0}}));
  CHECK(maj3.Upsilon == doctest::Approx(1.5).epsilon(1e-9));
  auto maj5 = Nonlinearity(majority_rule({{5, 1.0}}));
  CHECK(maj5.Upsilon == doctest::Approx(1.875).epsilon(1e-9));
  CHECK(maj3.is_kpp);
  CHECK(maj5.is_kpp);

  auto unan = Nonlinearity(point_rule(3, 3));
  CHECK(unan.Upsilon == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(unan.Fprime0 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_FALSE(unan.is_kpp);
  CHECK(std::isnan(unan.Xi));  // not odd-symmetric, no voting fixed point
}

TEST_CASE("exponential-rate envelope over omega in (0,1]") {
  auto s = sigma(1.5, 2.0);
  CHECK(s.value == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(s.omega == doctest::Approx(1.0).epsilon(1e-6));

  s = sigma(1.5, 1.2);
  CHECK(s.value == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(s.omega == doctest::Approx(1.0).epsilon(1e-6));

  CHECK(sigma(2.0, 2.0).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sigma(1.3, 1.3).value == doctest::Approx(0.0).epsilon(1e-12));

  // interior maximizer: dumb dense scan as the oracle
  auto in = sigma(1.1, 2.0);
  double best = -1e300, warg = 0.0;
  for (int i = 1; i <= 2000000; ++i) {
    const double w = i * 5e-7;
    const double v = (1.0 - 1.1 * std::pow(2.0, -w)) / w;
    if (v > best) {
      best = v;
      warg = w;
    }
  }
  CHECK(in.value == doctest::Approx(best).epsilon(1e-8));
  CHECK(in.omega == doctest::Approx(warg).epsilon(1e-3));
  CHECK(in.omega < 0.999);  // genuinely interior

  // decreasing in the slope argument, increasing in the mobility factor
  CHECK(sigma(1.875, 1.2).value < sigma(1.5, 1.2).value);
  CHECK(sigma(1.2, 2.0).value > sigma(1.5, 2.0).value);
  CHECK(sigma(1.5, 2.5).value > sigma(1.5, 2.0).value);

  CHECK_THROWS(sigma(1.0, 2.0));
  CHECK_THROWS(sigma(1.5, 1.0));
}

TEST_CASE("speed bracket") {
  auto maj3 = Nonlinearity(majority_rule({{3, 1.0}}));
  auto sp = speeds(maj3, 2.0, 2.0);
  CHECK(sp.c_under == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(sp.c_over == doctest::Approx(0.5).epsilon(1e-10));

  auto unan = Nonlinearity(point_rule(4, 2));  // not KPP in general
  auto sp2 = speeds(unan, 1.0, 1.7);
  CHECK(sp2.c_under <= sp2.c_over + 1e-12);
}

TEST_CASE("frozen sample values") {
  auto maj3 = majority_rule({{3, 1.0}});
  CHECK(eval_F(maj3, 0.5) == doctest::Approx(0.6875).epsilon(1e-13));
  CHECK(eval_F(maj3, 0.0) == doctest::Approx(0.0).epsilon(1e-14));
  auto mix = majority_rule({{1, 0.9}, {3, 0.1}});
  CHECK(eval_F_prime(mix, 0.0) == doctest::Approx(1.05).epsilon(1e-12));
}

TEST_CASE("domain is enforced") {
  auto maj3 = majority_rule({{3, 1.0}});
  CHECK_THROWS(eval_F(maj3, 1.01));
  CHECK_THROWS(eval_F(maj3, -1.01));
  CHECK_THROWS(eval_F_prime(maj3, 2.0));
}

TEST_CASE("rule validation rejects malformed input") {
  CHECK_THROWS(make_rule({{3, 0.5}}, {{3, {0, 1, 0}}}));             // pmf sums to 0.5
  CHECK_THROWS(make_rule({{0, 1.0}}, {{0, {}}}));                    // arity 0
  CHECK_THROWS(make_rule({{2, 1.0}}, {{2, {1.0}}}));                 // row length
  CHECK_THROWS(make_rule({{2, 1.0}}, {{3, {0, 1, 0}}}));             // row missing
  CHECK_THROWS(make_rule({{2, 1.0}}, {{2, {0.5, 0.6}}}));            // row sum
  CHECK_THROWS(make_rule({{2, 1.0}}, {{2, {-0.1, 1.1}}}));           // negative
  CHECK(make_rule({{3, 1.0}}, {{3, {0.5, 0.0, 0.5}}}).odd_symmetric);
  CHECK_FALSE(make_rule({{3, 1.0}}, {{3, {0.4, 0.0, 0.6}}}).odd_symmetric);
}
