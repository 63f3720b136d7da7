#pragma once

#include "checkpoint.hpp"

#include <json.hpp>

namespace ufv {

// One run.json per output directory; ties artifacts to the exact config,
// seed, dataset and input checkpoints that produced them.
struct RunManifest {
    std::string command;
    nlohmann::json effective_config;
    std::string config_hash;
    uint64_t seed = 0;
    std::string dataset_path;    // manifest file, empty if unused
    std::string dataset_sha256;
    std::vector<LineageEntry> lineage;
    std::string tool_version;
    std::string created_utc;
};

// writes <dir>/run.json plus <dir>/effective_config.json; returns run.json path
std::string write_run_manifest(RunManifest m, const std::string& dir);
RunManifest read_run_manifest(const std::string& path);

// Repository lint: every checkpoint must verify and reference a run manifest,
// every artifact directory must carry run.json, every referenced dataset hash
// must still match. Returns human-readable problems (empty == clean).
std::vector<std::string> lint_artifacts(const std::string& root);

std::string hash_of_json(const nlohmann::json& j);

}  // namespace ufv
