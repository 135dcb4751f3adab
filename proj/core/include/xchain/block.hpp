#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "xchain/codec.hpp"
#include "xchain/rational.hpp"

namespace xchain {

using BlockId = Digest;

struct ChainParams {
  ChainId chain_id;
  std::string unit;
  Tick block_interval = 1;
  double fork_probability = 0.0;  // chance that a mined block gets a competing sibling
  std::uint32_t pow_difficulty = 0;  // leading zero bits required of a header digest
  std::uint32_t default_confirm_depth = 6;
  Rational tps{0};
};

struct BlockHeader {
  std::uint64_t height = 0;
  Digest prev;
  Digest payload;
  Tick tick = 0;
  std::string miner;
  std::uint64_t nonce = 0;

  void encode(Encoder& enc) const;
  Digest digest() const;

  bool operator==(const BlockHeader&) const = default;
};

bool meets_difficulty(const Digest& digest, std::uint32_t bits);
bool pow_valid(const BlockHeader& header, std::uint32_t bits);

/// Searches nonces upward from zero; the first valid one is kept.
void solve_pow(BlockHeader& header, std::uint32_t bits);

/// Seeded generator with a platform-independent mapping to doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace xchain
