#pragma once
#include <map>
#include <vector>

namespace abb {

// Offspring distribution p_n plus per-arity threshold rows eta_{n,1..n}.
// A parent with n children samples threshold L ~ eta_{n,.} and votes +1 iff
// at least L children voted +1; in value mode it takes the L-th largest
// child value. odd_symmetric <=> eta_{n,k} == eta_{n,n-k+1} for all n,k.
struct VotingRule {
  std::map<int, double> offspring_pmf;
  std::map<int, std::vector<double>> thresholds;
  bool odd_symmetric = false;
  int N_max = 0;

  // Flattened views, filled by finalize(); index a runs over arities[].
  std::vector<int> arities;
  std::vector<double> arity_prob;
  std::vector<double> arity_cum;                 // inclusive prefix sums
  std::vector<std::vector<double>> eta;          // eta[a][k-1]
  std::vector<std::vector<double>> eta_cum;      // inclusive prefix sums
  std::vector<int> fixed_rank;                   // 1-based rank if the row is a point mass, else 0
  double mean_offspring = 0.0;

  // Validates both maps (probabilities sum to 1 within 1e-12, entries
  // nonnegative, threshold row lengths match arities) and builds the
  // flattened views. Throws std::invalid_argument naming the offender.
  void finalize();
};

VotingRule make_rule(const std::map<int, double>& pmf,
                     const std::map<int, std::vector<double>>& thresholds);

// Majority rule: eta_{n,k} = (delta_{k,floor((n+1)/2)} + delta_{k,ceil((n+1)/2)})/2.
VotingRule majority_rule(const std::map<int, double>& pmf);

}  // namespace abb
