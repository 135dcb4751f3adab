#include "xchain/scenario.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "xchain/error.hpp"

namespace xchain {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(Errc::scenario_invalid, path.empty() ? what : "\"" + path + "\": " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void only_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(path, "unknown key \"" + key + "\"");
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing required key \"" + key + "\"");
  return *it;
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    fail(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

Rational as_rational(const json& v, const std::string& path) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_string())
    if (auto r = parse_rational(v.get<std::string>())) return *r;
  fail(path, "expected an integer or a \"p/q\" string");
}

template <class T>
T opt_u(const json& obj, const std::string& key, const std::string& path, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  const auto v = as_u64(*it, join(path, key));
  if (v > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) fail(join(path, key), "value out of range");
  return static_cast<T>(v);
}

ChainParams parse_chain(const json& c, const std::string& path) {
  only_keys(c, path,
            {"id", "unit", "block_interval", "fork_probability", "pow_difficulty", "confirm_depth", "tps", "balances"});
  ChainParams p;
  p.chain_id = as_string(need(c, "id", path), join(path, "id"));
  if (p.chain_id.empty()) fail(join(path, "id"), "must not be empty");
  if (auto it = c.find("unit"); it != c.end()) p.unit = as_string(*it, join(path, "unit"));
  p.block_interval = opt_u<Tick>(c, "block_interval", path, 1);
  if (p.block_interval < 1) fail(join(path, "block_interval"), "must be at least 1");
  if (auto it = c.find("fork_probability"); it != c.end()) {
    if (!it->is_number()) fail(join(path, "fork_probability"), "expected a number");
    p.fork_probability = it->get<double>();
    if (p.fork_probability < 0.0 || p.fork_probability >= 1.0) fail(join(path, "fork_probability"), "must be in [0, 1)");
  }
  p.pow_difficulty = opt_u<std::uint32_t>(c, "pow_difficulty", path, 0);
  if (p.pow_difficulty > 24) fail(join(path, "pow_difficulty"), "at most 24 bits");
  p.default_confirm_depth = opt_u<std::uint32_t>(c, "confirm_depth", path, 6);
  if (p.default_confirm_depth < 1) fail(join(path, "confirm_depth"), "must be at least 1");
  if (auto it = c.find("tps"); it != c.end()) {
    p.tps = as_rational(*it, join(path, "tps"));
    if (p.tps < Rational(0)) fail(join(path, "tps"), "must be non-negative");
  }
  return p;
}

std::map<ParticipantId, Amount> parse_balances(const json& b, const std::string& path) {
  if (!b.is_object()) fail(path, "expected an object");
  std::map<ParticipantId, Amount> out;
  for (const auto& [who, v] : b.items()) out[who] = as_u64(v, join(path, who));
  return out;
}

Step parse_step(const json& v, const std::string& path) {
  const auto s = as_string(v, path);
  if (s == "deploy") return Step::deploy;
  if (s == "authorize") return Step::authorize;
  if (s == "redeem") return Step::redeem;
  if (s == "refund") return Step::refund;
  fail(path, "unknown step \"" + s + "\"");
}

Fault parse_fault(const json& f, const std::string& path) {
  only_keys(f, path, {"participant", "behavior", "step", "recover_tick", "group"});
  Fault out;
  out.participant = as_string(need(f, "participant", path), join(path, "participant"));
  const auto kind = as_string(need(f, "behavior", path), join(path, "behavior"));
  auto forbid = [&](std::string_view key) {
    if (f.contains(key)) fail(join(path, std::string(key)), "not valid for behavior " + kind);
  };
  if (kind == "honest") {
    forbid("step"), forbid("recover_tick"), forbid("group");
    out.behavior = Honest{};
  } else if (kind == "crash_at") {
    forbid("group");
    CrashAt c;
    c.step = parse_step(need(f, "step", path), join(path, "step"));
    if (auto it = f.find("recover_tick"); it != f.end())
      c.recover_tick = static_cast<Tick>(as_u64(*it, join(path, "recover_tick")));
    out.behavior = c;
  } else if (kind == "decline_publish") {
    forbid("step"), forbid("recover_tick"), forbid("group");
    out.behavior = DeclinePublish{};
  } else if (kind == "coalition") {
    forbid("step"), forbid("recover_tick");
    Coalition c{"coalition"};
    if (auto it = f.find("group"); it != f.end()) c.group = as_string(*it, join(path, "group"));
    out.behavior = c;
  } else {
    fail(join(path, "behavior"), "unknown behavior \"" + kind + "\"");
  }
  return out;
}

std::optional<std::uint32_t> fixed_or_random(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || (it->is_string() && it->get<std::string>() == "random")) return std::nullopt;
  const auto v = as_u64(*it, join(path, key));
  if (v > 1'000'000) fail(join(path, key), "value out of range");
  return static_cast<std::uint32_t>(v);
}

ojson tx_to_json(const ChainTx& tx) {
  ojson j;
  j["id"] = tx.id().hex();
  j["kind"] = to_string(tx.kind());
  j["nonce"] = tx.nonce();
  std::visit(
      [&](const auto& body) {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, TransferTx>) {
          j["from"] = body.from.hex();
          j["to"] = body.to.hex();
          j["amount"] = body.amount;
        } else if constexpr (std::is_same_v<B, DeployTx>) {
          j["sender"] = body.msg.sender.hex();
          j["value"] = body.msg.value;
          j["contract"] = contract_id_for(tx.id()).hex();
          if (const auto* a = std::get_if<SwapContractArgs>(&body.args)) {
            j["template"] = "swap";
            j["recipient"] = a->recipient.hex();
            j["expiry"] = a->expiry ? ojson(*a->expiry) : ojson(nullptr);
          } else {
            j["template"] = "witness";
          }
        } else {
          j["contract"] = body.contract.hex();
          j["fn"] = to_string(body.fn);
        }
      },
      tx.body());
  return j;
}

}  // namespace

std::string scenario_digest(const json& doc) { return sha256(doc.dump()).hex(); }

Scenario parse_scenario(const json& doc) {
  only_keys(doc, "",
            {"name", "graph", "protocol", "chains", "witness_chain", "d", "delta_ticks", "fees", "security", "faults",
             "adversary", "seeds", "seed_range", "horizon_ticks", "refund_timeout_deltas", "trent_race"});
  Scenario sc;
  sc.digest = scenario_digest(doc);
  if (auto it = doc.find("name"); it != doc.end()) sc.name = as_string(*it, "name");

  const std::string proto = as_string(need(doc, "protocol", ""), "protocol");
  auto p = parse_protocol(proto);
  if (!p) fail("protocol", "expected AC3TW, AC3WN or Baseline, got \"" + proto + "\"");
  sc.protocol = *p;

  sc.d = opt_u<std::uint32_t>(doc, "d", "", 6);
  if (sc.d < 1) fail("d", "must be at least 1");
  sc.delta = opt_u<Tick>(doc, "delta_ticks", "", 0);
  sc.horizon = opt_u<Tick>(doc, "horizon_ticks", "", 0);
  sc.refund_timeout_deltas = opt_u<std::uint32_t>(doc, "refund_timeout_deltas", "", 2);
  if (auto it = doc.find("trent_race"); it != doc.end()) {
    if (!it->is_boolean()) fail("trent_race", "expected a boolean");
    sc.trent_race = it->get<bool>();
  }

  const json& chains = need(doc, "chains", "");
  if (!chains.is_array() || chains.empty()) fail("chains", "expected a non-empty array");
  std::set<ChainId> ids;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const std::string path = "chains[" + std::to_string(i) + "]";
    sc.chains.push_back(parse_chain(chains[i], path));
    if (!ids.insert(sc.chains.back().chain_id).second) fail(path + ".id", "duplicate chain id");
    if (auto it = chains[i].find("balances"); it != chains[i].end())
      sc.balances[sc.chains.back().chain_id] = parse_balances(*it, path + ".balances");
  }
  if (auto it = doc.find("witness_chain"); it != doc.end()) {
    if (it->is_string()) {
      sc.witness_chain = it->get<std::string>();
      if (!ids.count(*sc.witness_chain)) fail("witness_chain", "names no chain in \"chains\"");
    } else {
      ChainParams w = parse_chain(*it, "witness_chain");
      if (!ids.insert(w.chain_id).second) fail("witness_chain.id", "duplicate chain id");
      if (auto b = it->find("balances"); b != it->end())
        sc.balances[w.chain_id] = parse_balances(*b, "witness_chain.balances");
      sc.witness_chain = w.chain_id;
      sc.chains.push_back(std::move(w));
    }
  }
  if (sc.protocol == Protocol::ac3wn && !sc.witness_chain) fail("witness_chain", "required for AC3WN");

  const json& g = need(doc, "graph", "");
  only_keys(g, "graph", {"vertices", "edges", "t"});
  const json& vs = need(g, "vertices", "graph");
  if (!vs.is_array() || vs.empty()) fail("graph.vertices", "expected a non-empty array");
  std::vector<ParticipantId> vertices;
  for (std::size_t i = 0; i < vs.size(); ++i)
    vertices.push_back(as_string(vs[i], "graph.vertices[" + std::to_string(i) + "]"));
  const json& es = need(g, "edges", "graph");
  if (!es.is_array() || es.empty()) fail("graph.edges", "expected a non-empty array");
  std::vector<SwapEdge> edges;
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string path = "graph.edges[" + std::to_string(i) + "]";
    only_keys(es[i], path, {"from", "to", "amount", "unit", "chain"});
    SwapEdge e;
    e.from = as_string(need(es[i], "from", path), path + ".from");
    e.to = as_string(need(es[i], "to", path), path + ".to");
    e.amount = as_u64(need(es[i], "amount", path), path + ".amount");
    e.chain = as_string(need(es[i], "chain", path), path + ".chain");
    if (auto it = es[i].find("unit"); it != es[i].end()) e.unit = as_string(*it, path + ".unit");
    if (!ids.count(e.chain)) fail(path + ".chain", "names no chain in \"chains\"");
    edges.push_back(std::move(e));
  }
  std::int64_t t = 0;
  if (auto it = g.find("t"); it != g.end()) {
    if (!it->is_number_integer()) fail("graph.t", "expected an integer");
    t = it->get<std::int64_t>();
  }
  try {
    sc.graph = SwapGraph(std::move(vertices), std::move(edges), t);
  } catch (const Error& e) {
    fail("graph", e.what());
  }
  for (const auto& [chain, balances] : sc.balances)
    for (const auto& [who, _] : balances)
      if (!sc.graph.contains(who)) fail("chains", "balance for unknown participant \"" + who + "\" on " + chain);

  if (auto it = doc.find("fees"); it != doc.end()) {
    only_keys(*it, "fees", {"deploy", "call"});
    sc.fees.deploy = as_u64(need(*it, "deploy", "fees"), "fees.deploy");
    sc.fees.call = as_u64(need(*it, "call", "fees"), "fees.call");
  }
  if (auto it = doc.find("security"); it != doc.end()) {
    only_keys(*it, "security", {"va", "ch", "dh"});
    sc.security = SecurityParams{as_rational(need(*it, "va", "security"), "security.va"),
                                 as_rational(need(*it, "ch", "security"), "security.ch"),
                                 as_rational(need(*it, "dh", "security"), "security.dh")};
  }
  if (auto it = doc.find("faults"); it != doc.end()) {
    if (!it->is_array()) fail("faults", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "faults[" + std::to_string(i) + "]";
      sc.faults.push_back(parse_fault((*it)[i], path));
      if (!sc.graph.contains(sc.faults.back().participant)) fail(path + ".participant", "not a graph vertex");
    }
  }
  if (auto it = doc.find("adversary"); it != doc.end()) {
    only_keys(*it, "adversary", {"chain", "at_confirmations", "branch_len"});
    AdversaryPlan a;
    a.chain = as_string(need(*it, "chain", "adversary"), "adversary.chain");
    if (!ids.count(a.chain)) fail("adversary.chain", "names no chain");
    a.at_confirmations = fixed_or_random(*it, "at_confirmations", "adversary");
    a.branch_len = fixed_or_random(*it, "branch_len", "adversary");
    if (a.branch_len && *a.branch_len < 1) fail("adversary.branch_len", "must be at least 1");
    sc.adversary = a;
  }
  const bool has_seeds = doc.contains("seeds"), has_range = doc.contains("seed_range");
  if (has_seeds && has_range) fail("seed_range", "give either \"seeds\" or \"seed_range\"");
  if (has_seeds) {
    const json& s = doc["seeds"];
    if (!s.is_array() || s.empty()) fail("seeds", "expected a non-empty array");
    for (std::size_t i = 0; i < s.size(); ++i) sc.seeds.push_back(as_u64(s[i], "seeds[" + std::to_string(i) + "]"));
  } else if (has_range) {
    const json& r = doc["seed_range"];
    only_keys(r, "seed_range", {"start", "count"});
    const auto start = as_u64(need(r, "start", "seed_range"), "seed_range.start");
    const auto count = as_u64(need(r, "count", "seed_range"), "seed_range.count");
    if (count < 1 || count > 1'000'000) fail("seed_range.count", "must be in [1, 1000000]");
    for (std::uint64_t i = 0; i < count; ++i) sc.seeds.push_back(start + i);
  } else {
    sc.seeds.push_back(0);
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::scenario_invalid, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::scenario_invalid, std::string("malformed JSON: ") + e.what());
  }
  Scenario sc = parse_scenario(doc);
  if (sc.name.empty()) sc.name = path.stem().string();
  return sc;
}

ojson outcome_to_json(const RunOutcome& o, const Scenario& sc) {
  ojson j;
  j["protocol"] = to_string(o.protocol);
  j["verdict"] = to_string(o.verdict);
  j["detail"] = o.verdict_detail;
  j["delta"] = o.delta;
  j["t_start"] = o.t_start;
  j["t_end"] = o.t_end ? ojson(*o.t_end) : ojson(nullptr);
  j["latency_ticks"] = o.latency_ticks() ? ojson(*o.latency_ticks()) : ojson(nullptr);
  j["latency_delta"] = o.latency_deltas() ? ojson(format_rational(*o.latency_deltas())) : ojson(nullptr);
  ojson phases = ojson::array();
  for (const auto& p : o.phases) phases.push_back({{"name", p.name}, {"tick", p.tick}});
  j["phases"] = phases;
  ojson edges = ojson::array();
  for (const auto& e : o.edges) {
    ojson je;
    je["from"] = e.edge.from;
    je["to"] = e.edge.to;
    je["amount"] = e.edge.amount;
    je["unit"] = e.edge.unit;
    je["chain"] = e.edge.chain;
    je["contract"] = e.contract ? ojson(e.contract->hex()) : ojson(nullptr);
    je["state"] = e.state ? ojson(std::string(to_string(*e.state))) : ojson(nullptr);
    je["expiry"] = e.expiry ? ojson(*e.expiry) : ojson(nullptr);
    edges.push_back(je);
  }
  j["edges"] = edges;
  j["witness_state"] = o.witness_state ? ojson(std::string(to_string(*o.witness_state))) : ojson(nullptr);
  j["witness_converged"] = o.witness_converged;
  ojson balances = ojson::object();
  for (const auto& [chain, m] : o.balances)
    for (const auto& [who, v] : m) balances[chain][who] = v;
  j["balances"] = balances;
  ojson fees = ojson::object();
  Amount total = 0;
  for (const auto& [chain, f] : o.fees) {
    fees[chain] = {{"deploys", f.deploys}, {"calls", f.calls}};
    total += f.deploys * sc.fees.deploy + f.calls * sc.fees.call;
  }
  j["fees"] = fees;
  j["fee_total"] = total;
  j["trent_signatures"] = o.trent_signatures;
  j["reorgs"] = o.reorgs;
  ojson trace = ojson::array();
  for (const auto& t : o.trace)
    trace.push_back({{"tick", t.tick}, {"actor", t.actor}, {"event", t.event}, {"detail", t.detail}});
  j["trace"] = trace;
  return j;
}

ojson run_record(const RunOutcome& o, const Scenario& sc) {
  ojson j;
  j["scenario_digest"] = sc.digest;
  j["scenario"] = sc.name;
  j["seed"] = o.seed;
  j["outcome"] = outcome_to_json(o, sc);
  return j;
}

ojson chain_to_json(const SimChain& chain) {
  ojson j;
  j["chain_id"] = chain.id();
  ojson blocks = ojson::array();
  for (const auto& id : chain.all_blocks()) {
    const Block& b = chain.block(id);
    ojson jb;
    jb["digest"] = id.hex();
    jb["height"] = b.header.height;
    jb["prev"] = b.header.prev.hex();
    jb["payload"] = b.header.payload.hex();
    jb["nonce"] = b.header.nonce;
    jb["miner"] = b.header.miner;
    jb["tick"] = b.header.tick;
    jb["canonical"] = chain.is_canonical(id);
    ojson txs = ojson::array();
    for (const auto& tx : b.txs) txs.push_back(tx_to_json(tx));
    jb["txs"] = txs;
    blocks.push_back(jb);
  }
  j["blocks"] = blocks;
  return j;
}

ojson interleave_to_json(const InterleaveReport& r) {
  ojson j;
  j["protocol"] = to_string(r.protocol);
  j["events"] = r.events;
  j["schedules"] = r.schedules;
  ojson verdicts = ojson::object();
  for (const auto& [v, n] : r.verdicts) verdicts[std::string(to_string(v))] = n;
  j["verdicts"] = verdicts;
  j["violations"] = r.violations;
  j["violating_schedules"] = r.violating;
  if (r.protocol == Protocol::ac3tw) j["signature_anomalies"] = r.signature_anomalies;
  return j;
}

ojson comparison_to_json(const Comparison& c) {
  auto rat = [](const std::optional<Rational>& r) { return r ? ojson(format_rational(*r)) : ojson(nullptr); };
  ojson j;
  j["protocol"] = to_string(c.protocol);
  j["measured_latency_delta"] = rat(c.measured_latency);
  j["predicted_latency_delta"] = rat(c.predicted_latency);
  j["deviation_delta"] = rat(c.deviation);
  j["deploys"] = c.deploys;
  j["calls"] = c.calls;
  j["predicted_deploys"] = c.predicted_deploys;
  j["predicted_calls"] = c.predicted_calls;
  j["measured_fee"] = c.measured_fee;
  j["predicted_fee"] = c.predicted_fee;
  j["flags"] = c.flags;
  return j;
}

BatchResult run_batch(const Scenario& sc, const std::vector<std::uint64_t>& seeds, const BatchOptions& opts) {
  BatchResult out;
  out.lines.resize(seeds.size());
  out.outcomes.resize(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        RunOutcome o = run_scenario(sc, seeds[i]);
        ojson rec = run_record(o, sc);
        if (opts.timing)
          rec["wall_time_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        out.lines[i] = rec.dump();
        o.chains.reset();
        out.outcomes[i] = std::move(o);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(seeds.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace xchain
