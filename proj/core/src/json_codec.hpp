#pragma once

// Internal nlohmann codecs shared by trace, corpus and report code. Not part
// of the public API; public headers stay free of vendor includes.

#include <json.hpp>

#include "lexchain/chain.hpp"
#include "lexchain/parser.hpp"

namespace lexchain {

nlohmann::json prediction_to_json_obj(const PredictionSet& p);
PredictionSet prediction_from_json_obj(const nlohmann::json& j);

nlohmann::json chain_run_to_json_obj(const ChainRun& run);
ChainRun chain_run_from_json_obj(const nlohmann::json& j);

}  // namespace lexchain
