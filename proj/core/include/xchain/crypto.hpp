#pragma once

#include <span>
#include <string_view>

#include "xchain/codec.hpp"

namespace xchain {

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

/// Ed25519 key pair. Keys are derived deterministically from a label so that
/// every run of a scenario sees the same identities.
struct KeyPair {
  PublicKey pk;
  SecretKey sk;

  static KeyPair from_label(std::string_view label);
};

Signature sign(const SecretKey& sk, std::span<const std::uint8_t> message);
bool verify(const PublicKey& pk, std::span<const std::uint8_t> message, const Signature& sig);

}  // namespace xchain
