#pragma once

// Exhaustive enumeration of event orders. Each event fires at most once; a
// schedule ends when no remaining event is enabled.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "xchain/error.hpp"
#include "xchain/protocols.hpp"

namespace xchain {

template <class State, class Enabled, class Apply, class Leaf>
std::uint64_t enumerate_schedules(const State& initial, std::size_t n_events, Enabled&& enabled, Apply&& apply,
                                  Leaf&& on_leaf, std::uint64_t limit) {
  std::vector<std::size_t> schedule;
  std::vector<bool> used(n_events, false);
  std::uint64_t leaves = 0;
  std::function<void(const State&)> dfs = [&](const State& s) {
    bool any = false;
    for (std::size_t i = 0; i < n_events; ++i) {
      if (used[i] || !enabled(s, i)) continue;
      any = true;
      State next = s;
      apply(next, i);
      used[i] = true;
      schedule.push_back(i);
      dfs(next);
      schedule.pop_back();
      used[i] = false;
    }
    if (!any) {
      if (++leaves > limit)
        throw Error(Errc::too_many_schedules, "more than " + std::to_string(limit) + " schedules");
      on_leaf(s, schedule);
    }
  };
  dfs(initial);
  return leaves;
}

struct InterleaveReport {
  Protocol protocol = Protocol::ac3wn;
  std::vector<std::string> events;
  std::uint64_t schedules = 0;
  std::map<Verdict, std::uint64_t> verdicts;
  std::uint64_t violations = 0;
  std::vector<std::vector<std::string>> violating;  // first few violating schedules, by event name
  std::uint64_t signature_anomalies = 0;           // AC3TW: schedules without exactly one Trent signature
};

/// Enumerates every legal schedule of the scenario's protocol with forks
/// disabled. Throws TooManySchedules when the event set exceeds `max_events`
/// or the schedule count exceeds `max_schedules`.
InterleaveReport run_interleavings(const Scenario& sc, std::size_t max_events,
                                   std::uint64_t max_schedules = 1'000'000, std::size_t keep_traces = 16);

/// Replays one schedule by event name. Throws InvalidParams when an event is
/// unknown or not enabled at its position.
Verdict replay_schedule(const Scenario& sc, const std::vector<std::string>& schedule);

/// Names of the model's events, in index order.
std::vector<std::string> interleave_events(const Scenario& sc);

}  // namespace xchain
