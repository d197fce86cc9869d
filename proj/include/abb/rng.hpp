#pragma once
// Counter-based RNG for reproducible parallel simulation.
//
// Streams are keyed by (seed, trial, node path), so every tree node owns an
// independent stream whose output does not depend on traversal order or on
// how many draws sibling subtrees consumed. Skipping a subtree entirely is
// therefore safe: the realized randomness of visited nodes is unchanged.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace abb {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer; full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Philox2x64-10: 128-bit counter, 64-bit key, 128-bit output per block.
struct Philox2x64 {
  static constexpr std::uint64_t kMul = 0xd2b74407b1ce6e93ull;

  static void block(std::uint64_t c0, std::uint64_t c1, std::uint64_t key,
                    std::uint64_t& out0, std::uint64_t& out1) {
    for (int round = 0; round < 10; ++round) {
      __uint128_t prod = static_cast<__uint128_t>(kMul) * c0;
      std::uint64_t lo = static_cast<std::uint64_t>(prod);
      std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
      c0 = hi ^ key ^ c1;
      c1 = lo;
      key += kGolden;
    }
    out0 = c0;
    out1 = c1;
  }
};

// Identifies one node of one trial's tree. Two hash lanes keep the collision
// probability across sibling paths negligible (~2^-128 per pair).
struct NodeKey {
  std::uint64_t h1 = 0x243f6a8885a308d3ull;  // root defaults
  std::uint64_t h2 = 0x13198a2e03707344ull;

  NodeKey child(unsigned index) const {
    NodeKey k;
    k.h1 = mix64(h1 + kGolden * (index + 1));
    k.h2 = mix64(h2 ^ (0xc2b2ae3d27d4eb4full * (index + 1)));
    return k;
  }
};

// Stream of draws for a single node. Draws are served from Philox blocks
// with counter (h1, h2 ^ block_index); the key encodes (seed, trial).
class NodeRng {
 public:
  NodeRng(std::uint64_t seed, std::uint64_t trial, const NodeKey& node)
      : key_(mix64(mix64(seed) + kGolden * trial)), node_(node) {}

  std::uint64_t next_u64() {
    if (have_ == 0) {
      Philox2x64::block(node_.h1, node_.h2 ^ block_, key_, buf_[0], buf_[1]);
      ++block_;
      have_ = 2;
    }
    return buf_[2 - have_--];
  }

  // Uniform on (0,1); never returns 0 or 1, safe under log().
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  double next_exponential(double rate) { return -std::log(next_uniform()) / rate; }

  // Box-Muller; one Gaussian per call (the sine partner is discarded so the
  // draw count stays independent of caller pairing).
  double next_gaussian() {
    double u1 = next_uniform();
    double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool next_coin() { return (next_u64() & 1ull) != 0; }

 private:
  std::uint64_t key_;
  NodeKey node_;
  std::uint64_t block_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int have_ = 0;
};

}  // namespace abb
