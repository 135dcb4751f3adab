#include "xchain/swap_graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

#include "xchain/error.hpp"

namespace xchain {
namespace {

using Adjacency = std::vector<std::vector<std::size_t>>;

struct Indexed {
  std::vector<ParticipantId> names;
  Adjacency out;
};

Indexed index_graph(const SwapGraph& g) {
  Indexed ix{g.vertices(), Adjacency(g.vertices().size())};
  auto pos = [&](const ParticipantId& id) {
    return static_cast<std::size_t>(std::lower_bound(ix.names.begin(), ix.names.end(), id) - ix.names.begin());
  };
  for (const auto& e : g.edges()) ix.out[pos(e.from)].push_back(pos(e.to));
  return ix;
}

constexpr std::uint32_t kUnreached = ~0u;

std::vector<std::uint32_t> bfs(const Adjacency& out, std::size_t src) {
  std::vector<std::uint32_t> dist(out.size(), kUnreached);
  std::deque<std::size_t> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    for (auto v : out[u])
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

// Cycle detection on the subgraph that excludes `removed` (npos keeps all).
bool has_cycle(const Adjacency& out, std::size_t removed) {
  const std::size_t n = out.size();
  std::vector<int> indegree(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    if (u == removed) continue;
    for (auto v : out[u])
      if (v != removed) ++indegree[v];
  }
  std::vector<std::size_t> ready;
  std::size_t live = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (u == removed) continue;
    ++live;
    if (indegree[u] == 0) ready.push_back(u);
  }
  std::size_t popped = 0;
  while (!ready.empty()) {
    auto u = ready.back();
    ready.pop_back();
    ++popped;
    for (auto v : out[u])
      if (v != removed && --indegree[v] == 0) ready.push_back(v);
  }
  return popped != live;
}

}  // namespace

SwapGraph::SwapGraph(std::vector<ParticipantId> vertices, std::vector<SwapEdge> edges, std::int64_t timestamp)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), timestamp_(timestamp) {
  std::sort(vertices_.begin(), vertices_.end());
  if (std::adjacent_find(vertices_.begin(), vertices_.end()) != vertices_.end())
    throw Error(Errc::invalid_params, "duplicate vertex in swap graph");
  for (const auto& e : edges_) {
    if (!contains(e.from) || !contains(e.to))
      throw Error(Errc::invalid_params, "edge endpoint " + e.from + "->" + e.to + " is not a vertex");
    if (e.from == e.to) throw Error(Errc::invalid_params, "edge source equals recipient: " + e.from);
    if (e.amount == 0) throw Error(Errc::invalid_params, "edge amount must be positive");
  }
  std::sort(edges_.begin(), edges_.end(), [](const SwapEdge& a, const SwapEdge& b) {
    return std::tie(a.from, a.to, a.chain, a.amount, a.unit) < std::tie(b.from, b.to, b.chain, b.amount, b.unit);
  });
}

bool SwapGraph::contains(const ParticipantId& id) const {
  return std::binary_search(vertices_.begin(), vertices_.end(), id);
}

void SwapGraph::encode(Encoder& enc) const {
  enc.str("xchain.swapgraph.v1").i64(timestamp_).u32(static_cast<std::uint32_t>(vertices_.size()));
  for (const auto& v : vertices_) enc.str(v);
  enc.u32(static_cast<std::uint32_t>(edges_.size()));
  for (const auto& e : edges_) enc.str(e.from).str(e.to).u64(e.amount).str(e.unit).str(e.chain);
}

Bytes SwapGraph::canonical_bytes() const {
  Encoder enc;
  encode(enc);
  return enc.take();
}

Digest SwapGraph::digest() const { return sha256(canonical_bytes()); }

Participant Participant::from_id(const ParticipantId& id, Behavior behavior) {
  return Participant{id, KeyPair::from_label("xchain/participant/" + id), std::move(behavior)};
}

void Multisignature::encode(Encoder& enc) const {
  enc.blob(graph_digest).u32(static_cast<std::uint32_t>(sigs.size()));
  for (const auto& [pk, sig] : sigs) enc.blob(pk).blob(sig);
}

Bytes Multisignature::canonical_bytes() const {
  Encoder enc;
  encode(enc);
  return enc.take();
}

Multisignature multisign(const SwapGraph& graph, std::span<const Participant> signers_in_order) {
  std::set<ParticipantId> signers;
  for (const auto& p : signers_in_order) {
    if (!graph.contains(p.id)) throw Error(Errc::invalid_params, p.id + " is not a participant of the graph");
    if (!signers.insert(p.id).second) throw Error(Errc::invalid_params, p.id + " signs twice");
  }
  for (const auto& v : graph.vertices())
    if (!signers.count(v)) throw Error(Errc::missing_participant, "no signature from " + v);

  const Bytes graph_bytes = graph.canonical_bytes();
  Multisignature ms{sha256(graph_bytes), {}};
  for (const auto& p : signers_in_order) {
    const Signature sig = ms.sigs.empty() ? sign(p.keys.sk, graph_bytes) : sign(p.keys.sk, ms.sigs.back().second.view());
    ms.sigs.emplace_back(p.pk(), sig);
  }
  return ms;
}

bool verify_multisig(const Multisignature& ms, const SwapGraph& graph,
                     const std::map<ParticipantId, PublicKey>& pks) {
  const Bytes graph_bytes = graph.canonical_bytes();
  if (ms.graph_digest != sha256(graph_bytes)) return false;
  if (ms.sigs.size() != graph.vertices().size()) return false;

  std::set<PublicKey> expected;
  for (const auto& v : graph.vertices()) {
    auto it = pks.find(v);
    if (it == pks.end()) return false;
    expected.insert(it->second);
  }
  std::set<PublicKey> seen;
  for (std::size_t i = 0; i < ms.sigs.size(); ++i) {
    const auto& [pk, sig] = ms.sigs[i];
    if (!expected.count(pk) || !seen.insert(pk).second) return false;
    const bool ok = i == 0 ? verify(pk, graph_bytes, sig) : verify(pk, ms.sigs[i - 1].second.view(), sig);
    if (!ok) return false;
  }
  return seen == expected;
}

std::optional<std::uint32_t> diameter(const SwapGraph& graph) {
  if (graph.vertices().empty()) throw Error(Errc::empty_graph, "diameter of an empty graph");
  if (graph.vertices().size() == 1 && graph.edges().empty()) return 0;

  const auto ix = index_graph(graph);
  const std::size_t n = ix.names.size();
  std::uint32_t best = 0;
  for (std::size_t u = 0; u < n; ++u) {
    const auto dist = bfs(ix.out, u);
    for (std::size_t v = 0; v < n; ++v) {
      if (v != u) {
        if (dist[v] == kUnreached) return std::nullopt;
        best = std::max(best, dist[v]);
      }
    }
    // u back to itself: the shortest cycle through u.
    std::uint32_t cycle = kUnreached;
    for (std::size_t p = 0; p < n; ++p)
      if (dist[p] != kUnreached && std::find(ix.out[p].begin(), ix.out[p].end(), u) != ix.out[p].end())
        cycle = std::min(cycle, dist[p] + 1);
    if (cycle == kUnreached) return std::nullopt;
    best = std::max(best, cycle);
  }
  return best;
}

Classification classify(const SwapGraph& graph) {
  if (graph.vertices().empty()) throw Error(Errc::empty_graph, "classify of an empty graph");
  const auto ix = index_graph(graph);
  const std::size_t n = ix.names.size();

  // Every vertex must reach and be reached from vertex 0.
  Adjacency in(n);
  for (std::size_t u = 0; u < n; ++u)
    for (auto v : ix.out[u]) in[v].push_back(u);
  for (const auto& adj : {std::cref(ix.out), std::cref(in)}) {
    const auto dist = bfs(adj.get(), 0);
    if (std::find(dist.begin(), dist.end(), kUnreached) != dist.end()) return {GraphClass::disconnected, {}};
  }

  Classification out{GraphClass::leader_acyclic, {}};
  for (std::size_t v = 0; v < n; ++v)
    if (!has_cycle(ix.out, v)) out.leaders.push_back(ix.names[v]);
  if (out.leaders.empty()) out.kind = GraphClass::cyclic_all_leaders;
  return out;
}

std::string_view to_string(GraphClass kind) {
  switch (kind) {
    case GraphClass::leader_acyclic: return "leader_acyclic";
    case GraphClass::cyclic_all_leaders: return "cyclic_all_leaders";
    case GraphClass::disconnected: return "disconnected";
  }
  return "?";
}

std::string_view to_string(Step step) {
  switch (step) {
    case Step::deploy: return "deploy";
    case Step::authorize: return "authorize";
    case Step::redeem: return "redeem";
    case Step::refund: return "refund";
  }
  return "?";
}

}  // namespace xchain
