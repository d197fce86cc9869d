#include "abb/voting_rule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace abb {

namespace {
constexpr double kProbTol = 1e-12;
}

void VotingRule::finalize() {
  if (offspring_pmf.empty()) throw std::invalid_argument("offspring pmf is empty");

  arities.clear();
  arity_prob.clear();
  arity_cum.clear();
  eta.clear();
  eta_cum.clear();
  fixed_rank.clear();

  double total = 0.0;
  N_max = 0;
  mean_offspring = 0.0;
  for (const auto& [n, p] : offspring_pmf) {
    if (n < 1)
      throw std::invalid_argument("offspring arity must be >= 1, got " + std::to_string(n));
    if (p < 0.0)
      throw std::invalid_argument("negative probability at arity " + std::to_string(n));
    total += p;
    if (p > 0.0) N_max = std::max(N_max, n);
    mean_offspring += n * p;
  }
  if (std::abs(total - 1.0) > kProbTol)
    throw std::invalid_argument("offspring pmf sums to " + std::to_string(total));

  odd_symmetric = true;
  double cum = 0.0;
  for (const auto& [n, p] : offspring_pmf) {
    auto it = thresholds.find(n);
    if (it == thresholds.end())
      throw std::invalid_argument("missing threshold row for arity " + std::to_string(n));
    const auto& row = it->second;
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("threshold row for arity " + std::to_string(n) +
                                  " has length " + std::to_string(row.size()));
    double row_sum = 0.0;
    for (int k = 1; k <= n; ++k) {
      double e = row[k - 1];
      if (e < 0.0)
        throw std::invalid_argument("negative threshold weight at arity " + std::to_string(n));
      row_sum += e;
      if (std::abs(e - row[n - k]) > kProbTol) odd_symmetric = false;
    }
    if (std::abs(row_sum - 1.0) > kProbTol)
      throw std::invalid_argument("threshold row for arity " + std::to_string(n) +
                                  " sums to " + std::to_string(row_sum));

    arities.push_back(n);
    arity_prob.push_back(p);
    cum += p;
    arity_cum.push_back(cum);
    eta.push_back(row);
    std::vector<double> ec(row.size());
    double c = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      c += row[i];
      ec[i] = c;
    }
    ec.back() = 1.0;  // row sum already validated; guard CDF inversion
    eta_cum.push_back(ec);

    int nz = 0, last = 0;
    for (int k = 1; k <= n; ++k)
      if (row[k - 1] > 0.0) {
        ++nz;
        last = k;
      }
    fixed_rank.push_back(nz == 1 ? last : 0);
  }
  if (!arity_cum.empty()) arity_cum.back() = 1.0;  // guard CDF inversion
}

VotingRule make_rule(const std::map<int, double>& pmf,
                     const std::map<int, std::vector<double>>& thresholds) {
  VotingRule r;
  r.offspring_pmf = pmf;
  r.thresholds = thresholds;
  r.finalize();
  return r;
}

VotingRule majority_rule(const std::map<int, double>& pmf) {
  std::map<int, std::vector<double>> thresholds;
  for (const auto& [n, p] : pmf) {
    if (n < 1)
      throw std::invalid_argument("offspring arity must be >= 1, got " + std::to_string(n));
    std::vector<double> row(n, 0.0);
    int lo = (n + 1) / 2;      // floor
    int hi = (n + 2) / 2;      // ceil of (n+1)/2
    row[lo - 1] += 0.5;
    row[hi - 1] += 0.5;
    thresholds[n] = row;
  }
  return make_rule(pmf, thresholds);
}

}  // namespace abb
