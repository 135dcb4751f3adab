#include "xchain/crypto.hpp"

#include <sodium.h>

#include <stdexcept>

namespace xchain {
namespace {

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    return true;
  }();
  (void)ready;
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  Digest out;
  crypto_hash_sha256(out.bytes.data(), data.data(), data.size());
  return out;
}

Digest sha256(std::string_view data) {
  return sha256({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

KeyPair KeyPair::from_label(std::string_view label) {
  ensure_sodium();
  const Digest seed = sha256(label);
  KeyPair kp;
  crypto_sign_seed_keypair(kp.pk.bytes.data(), kp.sk.bytes.data(), seed.bytes.data());
  return kp;
}

Signature sign(const SecretKey& sk, std::span<const std::uint8_t> message) {
  ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(), sk.bytes.data());
  return sig;
}

bool verify(const PublicKey& pk, std::span<const std::uint8_t> message, const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(), pk.bytes.data()) == 0;
}

}  // namespace xchain
