#include "xchain/error.hpp"

namespace xchain {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::duplicate_tx: return "DuplicateTx";
    case Errc::unknown_block: return "UnknownBlock";
    case Errc::unknown_contract: return "UnknownContract";
    case Errc::invalid_tx: return "InvalidTx";
    case Errc::insufficient_funds: return "InsufficientFunds";
    case Errc::wrong_state: return "WrongState";
    case Errc::invalid_secret: return "InvalidSecret";
    case Errc::bad_evidence: return "BadEvidence";
    case Errc::empty_graph: return "EmptyGraph";
    case Errc::missing_participant: return "MissingParticipant";
    case Errc::chain_too_short: return "ChainTooShort";
    case Errc::not_stable_yet: return "NotStableYet";
    case Errc::not_canonical: return "NotCanonical";
    case Errc::below_anchor: return "BelowAnchor";
    case Errc::scenario_invalid: return "ScenarioInvalid";
    case Errc::baseline_inapplicable: return "BaselineInapplicable";
    case Errc::unbounded_diameter: return "UnboundedDiameter";
    case Errc::empty_list: return "EmptyList";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::too_many_schedules: return "TooManySchedules";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace xchain
