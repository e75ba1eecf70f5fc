#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ttrl/trainer.hpp"

namespace ttrl {

// Parses the flat sectioned key/value run-configuration format. Every
// documented default is materialized in the returned RunConfig, so emitting
// it back with format_config and reloading reproduces the identical config.
// Overrides are "section.key=value" strings applied after the file.
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

RunConfig parse_config(const std::string& text, const std::string& source_name,
                       const std::vector<std::string>& overrides = {});

// Fully-resolved config text; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& config);

std::string reward_mode_name(RewardMode mode);
RewardMode reward_mode_from_name(const std::string& name);

}  // namespace ttrl
