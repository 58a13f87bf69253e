#pragma once

#include "json.hpp"

#include "fracfk/config.hpp"

namespace fracfk {

nlohmann::ordered_json config_to_json(const RunConfig& config);

}  // namespace fracfk
