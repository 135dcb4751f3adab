#include "xchain/block.hpp"

#include "xchain/crypto.hpp"

namespace xchain {

void BlockHeader::encode(Encoder& enc) const {
  enc.u64(height).blob(prev).blob(payload).i64(tick).str(miner).u64(nonce);
}

Digest BlockHeader::digest() const {
  Encoder enc;
  encode(enc);
  return sha256(enc.buffer());
}

bool meets_difficulty(const Digest& digest, std::uint32_t bits) {
  if (bits > 256) return false;
  std::uint32_t i = 0;
  for (; i + 8 <= bits; i += 8)
    if (digest.bytes[i / 8] != 0) return false;
  const std::uint32_t rest = bits - i;
  if (rest == 0) return true;
  const auto mask = static_cast<std::uint8_t>(0xFFu << (8 - rest));
  return (digest.bytes[i / 8] & mask) == 0;
}

bool pow_valid(const BlockHeader& header, std::uint32_t bits) { return meets_difficulty(header.digest(), bits); }

void solve_pow(BlockHeader& header, std::uint32_t bits) {
  header.nonce = 0;
  while (!pow_valid(header, bits)) ++header.nonce;
}

}  // namespace xchain
