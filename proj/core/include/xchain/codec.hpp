#pragma once

// Canonical serialization: every field is written big-endian; variable-length
// fields (and fixed-size blobs, for uniformity) carry a u32 length prefix.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xchain {

using Bytes = std::vector<std::uint8_t>;
using Amount = std::uint64_t;
using Tick = std::int64_t;
using ChainId = std::string;
using ParticipantId = std::string;

std::string to_hex(std::span<const std::uint8_t> bytes);
std::optional<Bytes> from_hex(std::string_view hex);

template <std::size_t N, typename Tag>
struct Blob {
  std::array<std::uint8_t, N> bytes{};

  static constexpr std::size_t size() { return N; }
  std::span<const std::uint8_t> view() const { return bytes; }
  std::string hex() const { return to_hex(bytes); }
  bool is_zero() const {
    for (auto b : bytes)
      if (b != 0) return false;
    return true;
  }

  static std::optional<Blob> from_hex(std::string_view text) {
    auto raw = xchain::from_hex(text);
    if (!raw || raw->size() != N) return std::nullopt;
    Blob out;
    std::copy(raw->begin(), raw->end(), out.bytes.begin());
    return out;
  }

  auto operator<=>(const Blob&) const = default;
};

using Digest = Blob<32, struct DigestTag>;
using PublicKey = Blob<32, struct PublicKeyTag>;
using SecretKey = Blob<64, struct SecretKeyTag>;
using Signature = Blob<64, struct SignatureTag>;

class Encoder {
 public:
  Encoder& u8(std::uint8_t v);
  Encoder& u32(std::uint32_t v);
  Encoder& u64(std::uint64_t v);
  Encoder& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  Encoder& boolean(bool v) { return u8(v ? 1 : 0); }
  Encoder& bytes(std::span<const std::uint8_t> v);
  Encoder& str(std::string_view v);

  template <std::size_t N, typename Tag>
  Encoder& blob(const Blob<N, Tag>& b) {
    return bytes(b.view());
  }

  const Bytes& buffer() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

}  // namespace xchain
