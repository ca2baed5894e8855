#pragma once

#include <json.hpp>

#include "wavenet/network.hpp"

namespace wavenet::detail {

nlohmann::json network_to_json(const NetworkConfig& config);
/// Throws Error(Format) when fields are missing or mistyped.
NetworkConfig network_from_json(const nlohmann::json& j);

}  // namespace wavenet::detail
