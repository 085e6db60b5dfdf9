#pragma once

#include <json.hpp>

#include "gcnh/model.hpp"

namespace gcnh {

/// {"architecture": "GCNH", "num_layers": 1, "hidden_size": 16, "dropout_rate": 0.0,
///  "aggregation": "sum", "beta_trainable": true, "beta_fixed_value": null, "share_mlps": false}
nlohmann::json to_json(const ModelConfig& config);

/// Missing keys keep their defaults. Throws InputError on bad values.
ModelConfig model_config_from_json(const nlohmann::json& j);

} // namespace gcnh
