#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xchain {

enum class Errc {
  duplicate_tx,
  unknown_block,
  unknown_contract,
  invalid_tx,
  insufficient_funds,
  wrong_state,
  invalid_secret,
  bad_evidence,
  empty_graph,
  missing_participant,
  chain_too_short,
  not_stable_yet,
  not_canonical,
  below_anchor,
  scenario_invalid,
  baseline_inapplicable,
  unbounded_diameter,
  empty_list,
  invalid_params,
  too_many_schedules,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace xchain
