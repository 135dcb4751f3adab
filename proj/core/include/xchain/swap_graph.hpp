#pragma once

// The cross-chain transaction graph: participants are vertices, and every
// edge is one asset transfer on one chain.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "xchain/codec.hpp"
#include "xchain/crypto.hpp"

namespace xchain {

struct SwapEdge {
  ParticipantId from;
  ParticipantId to;
  Amount amount = 0;
  std::string unit;
  ChainId chain;

  auto operator<=>(const SwapEdge&) const = default;
};

class SwapGraph {
 public:
  SwapGraph() = default;
  // Vertices and edges are sorted into canonical order, so two graphs with the
  // same content serialize identically regardless of construction order.
  SwapGraph(std::vector<ParticipantId> vertices, std::vector<SwapEdge> edges, std::int64_t timestamp);

  const std::vector<ParticipantId>& vertices() const { return vertices_; }
  const std::vector<SwapEdge>& edges() const { return edges_; }
  std::int64_t timestamp() const { return timestamp_; }
  bool contains(const ParticipantId& id) const;

  void encode(Encoder& enc) const;
  Bytes canonical_bytes() const;
  Digest digest() const;

  bool operator==(const SwapGraph&) const = default;

 private:
  std::vector<ParticipantId> vertices_;
  std::vector<SwapEdge> edges_;
  std::int64_t timestamp_ = 0;
};

/// Participant behaviour under fault injection. Steps are ordered
/// deploy < authorize < settle (redeem and refund share the last rank).
enum class Step : std::uint8_t { deploy = 0, authorize = 1, redeem = 2, refund = 3 };

struct Honest {};
struct CrashAt {
  Step step = Step::deploy;
  std::optional<Tick> recover_tick;  // crashed forever when empty
};
struct DeclinePublish {};
struct Coalition {
  std::string group;
};
using Behavior = std::variant<Honest, CrashAt, DeclinePublish, Coalition>;

struct Participant {
  ParticipantId id;
  KeyPair keys;
  Behavior behavior = Honest{};

  static Participant from_id(const ParticipantId& id, Behavior behavior = Honest{});
  const PublicKey& pk() const { return keys.pk; }
};

/// Nested multisignature: the first signer signs the canonical
/// graph bytes, every later signer signs the previous signature.
struct Multisignature {
  Digest graph_digest;
  std::vector<std::pair<PublicKey, Signature>> sigs;

  void encode(Encoder& enc) const;
  Bytes canonical_bytes() const;
  bool operator==(const Multisignature&) const = default;
};

Multisignature multisign(const SwapGraph& graph, std::span<const Participant> signers_in_order);
bool verify_multisig(const Multisignature& ms, const SwapGraph& graph,
                     const std::map<ParticipantId, PublicKey>& pks);

/// Max over ordered vertex pairs, u == v included, of the shortest directed
/// path length. Empty optional means some pair is unreachable.
std::optional<std::uint32_t> diameter(const SwapGraph& graph);

// disconnected: not strongly connected, so some vertex can never reach another.
enum class GraphClass { leader_acyclic, cyclic_all_leaders, disconnected };

struct Classification {
  GraphClass kind = GraphClass::leader_acyclic;
  std::vector<ParticipantId> leaders;  // only for leader_acyclic
};

Classification classify(const SwapGraph& graph);

std::string_view to_string(GraphClass kind);
std::string_view to_string(Step step);

}  // namespace xchain
