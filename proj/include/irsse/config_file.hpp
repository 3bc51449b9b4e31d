#pragma once

#include <string>
#include <string_view>

#include "irsse/scenario.hpp"

namespace irsse {

/// Flat `key = value` text, one entry per line, `#` starts a comment. Keys are
/// the ScenarioConfig field names; power keys may carry a `_dbm` suffix
/// (`p_t_dbm`, `sigma2_o_dbm`, ...). Unknown keys and malformed values throw
/// ConfigError. The result is validated.
ScenarioConfig parse_config(std::string_view text, ScenarioConfig base = {});

ScenarioConfig load_config(const std::string& path);

/// Applies a single `key = value` assignment without validating.
void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Parses "a", "a+bj", "a-bj", "bj".
cplx parse_complex(std::string_view text);

}  // namespace irsse
