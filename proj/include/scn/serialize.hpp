#pragma once

#include <json.hpp>

#include "scn/encoder.hpp"
#include "scn/model.hpp"
#include "scn/sgd.hpp"
#include "scn/synthetic.hpp"

namespace scn {

// JSON conversions shared by checkpoints and the CLI config file. Parsing is
// lenient about missing fields (defaults apply) and strict about values.

nlohmann::ordered_json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const SgdConfig& config);
SgdConfig sgd_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

}  // namespace scn
