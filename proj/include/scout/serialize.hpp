#pragma once

#include <nlohmann/json.hpp>

#include "scout/model.hpp"

namespace scout {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace scout
