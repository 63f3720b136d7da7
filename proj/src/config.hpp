#pragma once

#include "common.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ufv {

struct ConfigEntry {
    const char* key;  // dot path
    nlohmann::json def;
    const char* help;
};

// every configuration key with its default; --help and the echo both derive
// from this table
const std::vector<ConfigEntry>& config_schema();

nlohmann::json default_config();

// defaults <- optional JSON file <- "a.b.c=value" overrides (later wins).
// Unknown keys are rejected.
nlohmann::json load_config(const std::optional<std::string>& config_file,
                           const std::vector<std::string>& overrides);

nlohmann::json config_at(const nlohmann::json& cfg, const std::string& dot_path);

std::string config_help_text();

// refuses to reuse a non-empty directory unless force is set; creates it
void prepare_out_dir(const std::string& dir, bool force);

}  // namespace ufv
