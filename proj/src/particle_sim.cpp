#include "abb/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace abb {

namespace {

constexpr double kSubstep = 0.01;  // barrier-mode path resolution

enum class Advance { leaf, frozen_plus, frozen_minus, branch };

// Per-trial recursion state. The tree is realized depth-first; every node
// derives its stream from (seed, trial, path), so skipping a subtree never
// shifts anyone else's draws.
struct Engine {
  const VotingRule& rule;
  const SimConfig& cfg;
  std::uint64_t trial;
  const std::vector<double>* query = nullptr;  // set in bucket mode

  std::int64_t created = 0;
  std::int64_t leaves_alive = 0;
  bool truncated = false;
  std::vector<double> sig;  // sig[d] = gamma^(start_generation + d)

  Engine(const VotingRule& r, const SimConfig& c, std::uint64_t t) : rule(r), cfg(c), trial(t) {
    sig.reserve(64);
    sig.push_back(std::pow(cfg.gamma, cfg.start_generation));
  }

  double sigma(int depth) {
    while (static_cast<int>(sig.size()) <= depth) sig.push_back(sig.back() * cfg.gamma);
    return sig[depth];
  }

  int sign_vote(double x, NodeRng& rng) {
    if (x > 0.0) return +1;
    if (x < 0.0) return -1;
    return rng.next_coin() ? +1 : -1;
  }

  int bucket_of(double v) const {
    return static_cast<int>(std::lower_bound(query->begin(), query->end(), v) - query->begin());
  }

  // Diffuse for one Exp(zeta) lifetime capped at t_left. In barrier mode the
  // lifetime is cut into substeps and a Brownian-bridge first-passage test
  // runs per substep (upper barrier first); crossings freeze the particle at
  // +-gamma^k cutoff_L for good. Updates x and t_left in place.
  Advance advance(NodeRng& rng, int depth, double& x, double& t_left) {
    const double s = sigma(depth);
    const bool barriers = cfg.cutoff_L > 0.0;
    const double B = barriers ? s * cfg.cutoff_L : 0.0;
    if (barriers) {
      if (x >= B) return Advance::frozen_plus;
      if (x <= -B) return Advance::frozen_minus;
    }
    const double life = rng.next_exponential(cfg.zeta);
    const double tau = std::min(life, t_left);
    if (!barriers) {
      x += s * std::sqrt(tau) * rng.next_gaussian();
    } else {
      const double s2 = s * s;
      double done = 0.0;
      while (done < tau) {
        const double step = std::min(kSubstep, tau - done);
        const double xn = x + s * std::sqrt(step) * rng.next_gaussian();
        if (xn >= B) return Advance::frozen_plus;
        const double pu = std::exp(-2.0 * (B - x) * (B - xn) / (s2 * step));
        if (pu > 0.0 && rng.next_uniform() < pu) return Advance::frozen_plus;
        if (xn <= -B) return Advance::frozen_minus;
        const double pd = std::exp(-2.0 * (B + x) * (B + xn) / (s2 * step));
        if (pd > 0.0 && rng.next_uniform() < pd) return Advance::frozen_minus;
        x = xn;
        done += step;
      }
    }
    if (life >= t_left) {
      t_left = 0.0;
      return Advance::leaf;
    }
    t_left -= life;
    return Advance::branch;
  }

  int sample_arity_index(NodeRng& rng) const {
    if (rule.arities.size() == 1) return 0;
    const double u = rng.next_uniform();
    std::size_t i = 0;
    while (i + 1 < rule.arity_cum.size() && rule.arity_cum[i] < u) ++i;
    return static_cast<int>(i);
  }

  int sample_rank(NodeRng& rng, int arity_index) const {
    if (rule.fixed_rank[arity_index] > 0) return rule.fixed_rank[arity_index];
    const double u = rng.next_uniform();
    const auto& ec = rule.eta_cum[arity_index];
    std::size_t k = 0;
    while (k + 1 < ec.size() && ec[k] < u) ++k;
    return static_cast<int>(k) + 1;
  }

  // Vote propagation with exact short-circuiting: once the expanded children
  // pin the +-1 outcome of "at least L of n voted +1", siblings are skipped.
  int vote_rec(NodeKey key, int depth, double x, double t_left) {
    NodeRng rng(cfg.seed, trial, key);
    if (++created > cfg.particle_cap) {
      truncated = true;
      return sign_vote(x, rng);
    }
    switch (advance(rng, depth, x, t_left)) {
      case Advance::frozen_plus:
        return +1;
      case Advance::frozen_minus:
        return -1;
      case Advance::leaf:
        ++leaves_alive;
        return sign_vote(x, rng);
      case Advance::branch:
        break;
    }
    const int ai = sample_arity_index(rng);
    const int n = rule.arities[ai];
    const int L = sample_rank(rng, ai);
    int plus = 0, minus = 0;
    for (int i = 0; i < n; ++i) {
      if (plus >= L || minus > n - L) break;
      if (vote_rec(key.child(i), depth + 1, x, t_left) > 0)
        ++plus;
      else
        ++minus;
    }
    return plus >= L ? +1 : -1;
  }

  // Full expansion; the root receives the exact L-th largest child value.
  double value_rec(NodeKey key, int depth, double x, double t_left) {
    NodeRng rng(cfg.seed, trial, key);
    if (++created > cfg.particle_cap) {
      truncated = true;
      return x;
    }
    switch (advance(rng, depth, x, t_left)) {
      case Advance::frozen_plus:
        return sigma(depth) * cfg.cutoff_L;
      case Advance::frozen_minus:
        return -sigma(depth) * cfg.cutoff_L;
      case Advance::leaf:
        ++leaves_alive;
        return x;
      case Advance::branch:
        break;
    }
    const int ai = sample_arity_index(rng);
    const int n = rule.arities[ai];
    const int L = sample_rank(rng, ai);
    double buf[16];
    std::vector<double> heap;
    double* vals = buf;
    if (n > 16) {
      heap.resize(n);
      vals = heap.data();
    }
    for (int i = 0; i < n; ++i) vals[i] = value_rec(key.child(i), depth + 1, x, t_left);
    std::sort(vals, vals + n, std::greater<double>());
    return vals[L - 1];
  }

  // Value recursion over query-interval indices, clamped to [lo, hi].
  // Nondecreasing maps commute with order statistics, so the bucket of the
  // L-th largest value is the L-th largest bucket, and clamping every child
  // to the interval the already-expanded siblings leave open (the classic
  // median(a,b,.) = clamp(.,b,a) identity, generalized to any rank) keeps
  // the root bucket exact while collapsing most subtrees: a call whose
  // interval is a single bucket returns before touching its stream.
  int bucket_rec(NodeKey key, int depth, double x, double t_left, int lo, int hi) {
    if (lo == hi) return lo;
    NodeRng rng(cfg.seed, trial, key);
    if (++created > cfg.particle_cap) {
      truncated = true;
      return std::clamp(bucket_of(x), lo, hi);
    }
    switch (advance(rng, depth, x, t_left)) {
      case Advance::frozen_plus:
        return std::clamp(bucket_of(sigma(depth) * cfg.cutoff_L), lo, hi);
      case Advance::frozen_minus:
        return std::clamp(bucket_of(-sigma(depth) * cfg.cutoff_L), lo, hi);
      case Advance::leaf:
        ++leaves_alive;
        return std::clamp(bucket_of(x), lo, hi);
      case Advance::branch:
        break;
    }
    const int ai = sample_arity_index(rng);
    const int n = rule.arities[ai];
    const int L = sample_rank(rng, ai);
    int known[64];
    std::vector<int> heap;
    int* vals = known;
    if (n > 64) {
      heap.resize(n);
      vals = heap.data();
    }
    int cnt = 0;
    for (int i = 0; i < n; ++i) {
      // unexpanded children lie in [lo, hi]; padding the order statistic
      // with those extremes bounds it, and the bounds only tighten
      const int unknown = n - cnt;
      const int klo = L <= cnt ? vals[L - 1] : lo;
      const int khi = L <= unknown ? hi : vals[L - unknown - 1];
      if (klo == khi) return klo;
      const int b = bucket_rec(key.child(i), depth + 1, x, t_left, klo, khi);
      int j = cnt++;
      while (j > 0 && vals[j - 1] < b) {
        vals[j] = vals[j - 1];
        --j;
      }
      vals[j] = b;  // keep descending order
    }
    return vals[L - 1];
  }
};

TrialOutcome run_one(const VotingRule& rule, const SimConfig& cfg, std::uint64_t trial,
                     SimMode mode) {
  Engine e(rule, cfg, trial);
  TrialOutcome o;
  if (mode == SimMode::vote) {
    o.vote = e.vote_rec(NodeKey{}, 0, cfg.x0, cfg.horizon);
    o.value = o.vote;
  } else {
    o.value = e.value_rec(NodeKey{}, 0, cfg.x0, cfg.horizon);
    o.vote = o.value > 0.0 ? +1 : (o.value < 0.0 ? -1 : 0);
  }
  o.particles_peaked = e.created;
  o.leaves_alive = e.leaves_alive;
  o.truncated = e.truncated;
  return o;
}

Estimate summarize(const std::vector<TrialOutcome>& outcomes, bool votes) {
  Estimate est;
  double sum = 0.0, sumsq = 0.0;
  for (const auto& o : outcomes) {
    if (o.truncated) {
      ++est.truncated_trials;
      continue;
    }
    const double v = votes ? static_cast<double>(o.vote) : o.value;
    sum += v;
    sumsq += v * v;
    ++est.trials;
  }
  const auto n = est.trials;
  if (n > 0) est.mean = sum / n;
  if (n > 1) {
    double var = (sumsq - n * est.mean * est.mean) / (n - 1);
    est.std_error = std::sqrt(std::max(0.0, var) / n);
  }
  est.u_hat = est.mean;
  const auto total = n + est.truncated_trials;
  est.unreliable = total == 0 || est.truncated_trials * 100 > total;
  return est;
}

}  // namespace

void SimConfig::validate() const {
  if (!(gamma >= 1.0)) throw std::invalid_argument("sim config needs gamma >= 1");
  if (!(zeta > 0.0)) throw std::invalid_argument("sim config needs zeta > 0");
  if (!(horizon >= 0.0)) throw std::invalid_argument("sim config needs horizon >= 0");
  if (particle_cap < 1) throw std::invalid_argument("sim config needs particle_cap >= 1");
  if (cutoff_L < 0.0) throw std::invalid_argument("sim config needs cutoff_L >= 0");
  if (!std::isfinite(x0)) throw std::invalid_argument("sim config needs finite x0");
}

TrialOutcome simulate_vote(const VotingRule& rule, const SimConfig& cfg, std::uint64_t trial) {
  cfg.validate();
  return run_one(rule, cfg, trial, SimMode::vote);
}

TrialOutcome simulate_value(const VotingRule& rule, const SimConfig& cfg, std::uint64_t trial) {
  cfg.validate();
  return run_one(rule, cfg, trial, SimMode::value);
}

TrialOutcome simulate_vote_cutoff(const VotingRule& rule, const SimConfig& cfg,
                                  std::uint64_t trial) {
  if (!(cfg.cutoff_L > 0.0)) throw std::invalid_argument("cutoff simulation needs cutoff_L > 0");
  return simulate_vote(rule, cfg, trial);
}

std::vector<TrialOutcome> run_trials_serial(const VotingRule& rule, const SimConfig& cfg,
                                            std::int64_t trials, SimMode mode) {
  cfg.validate();
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  std::vector<TrialOutcome> out(trials);
  for (std::int64_t t = 0; t < trials; ++t) out[t] = run_one(rule, cfg, t, mode);
  return out;
}

std::vector<TrialOutcome> run_trials(const VotingRule& rule, const SimConfig& cfg,
                                     std::int64_t trials, SimMode mode) {
  cfg.validate();
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  std::vector<TrialOutcome> out(trials);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (std::int64_t t = 0; t < trials; ++t) out[t] = run_one(rule, cfg, t, mode);
  return out;
}

Estimate summarize_votes(const std::vector<TrialOutcome>& outcomes) {
  return summarize(outcomes, true);
}

Estimate summarize_values(const std::vector<TrialOutcome>& outcomes) {
  return summarize(outcomes, false);
}

Estimate estimate_u(const VotingRule& rule, const SimConfig& cfg, std::int64_t trials) {
  return summarize_votes(run_trials(rule, cfg, trials, SimMode::vote));
}

Estimate estimate_u_serial(const VotingRule& rule, const SimConfig& cfg, std::int64_t trials) {
  return summarize_votes(run_trials_serial(rule, cfg, trials, SimMode::vote));
}

ValueCdf estimate_value_cdf(const VotingRule& rule, const SimConfig& cfg, std::int64_t trials,
                            const std::vector<double>& query_points) {
  cfg.validate();
  if (cfg.x0 != 0.0)
    throw std::invalid_argument("value CDF estimation is defined for x0 = 0");
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (query_points.empty()) throw std::invalid_argument("need at least one query point");
  std::vector<double> q = query_points;
  std::sort(q.begin(), q.end());

  const int m = static_cast<int>(q.size());
  std::vector<std::int16_t> bucket(trials);
  std::vector<std::uint8_t> trunc(trials);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (std::int64_t t = 0; t < trials; ++t) {
    Engine e(rule, cfg, t);
    e.query = &q;
    bucket[t] = static_cast<std::int16_t>(e.bucket_rec(NodeKey{}, 0, cfg.x0, cfg.horizon, 0, m));
    trunc[t] = e.truncated ? 1 : 0;
  }

  std::vector<std::int64_t> hist(m + 1, 0);
  std::int64_t used = 0, truncated = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    if (trunc[t]) {
      ++truncated;
      continue;
    }
    ++hist[bucket[t]];
    ++used;
  }
  ValueCdf out;
  out.trials = used;
  out.truncated_trials = truncated;
  out.unreliable = used == 0 || truncated * 100 > trials;
  std::int64_t below = 0;
  for (int j = 0; j < m; ++j) {
    below += hist[j];
    CdfPoint pt;
    pt.x = q[j];
    if (used > 0) {
      pt.p = static_cast<double>(below) / used;
      pt.se = std::sqrt(pt.p * (1.0 - pt.p) / used);
    }
    out.points.push_back(pt);
  }
  return out;
}

}  // namespace abb
