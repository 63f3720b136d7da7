#pragma once

#include "model.hpp"

#include <json.hpp>

#include <map>

namespace ufv {

struct StageState {
    std::string stage;  // anchor-<i> | regressor | integrated
    int64_t step = 0;
    double loss_sr = 0.0;
    double loss_wt = 0.0;
    double loss_total = 0.0;
};

struct LineageEntry {
    std::string role;
    std::string path;
    std::string sha256;
};

struct CheckpointMeta {
    std::string kind;       // srg | regressor | ufvnet
    nlohmann::json spec;    // model spec
    nlohmann::json anchor_config;
    StageState stage;
    std::vector<LineageEntry> lineage;
    uint64_t seed = 0;
    std::string params_sha256;  // filled by save/load
    std::string run_manifest;   // relative path to the producing run.json
    std::string created_utc;
    std::string tool_version;
};

// spec <-> json
nlohmann::json srg_spec_to_json(const SrgSpec& s);
SrgSpec srg_spec_from_json(const nlohmann::json& j);
nlohmann::json regressor_spec_to_json(const RegressorSpec& s);
RegressorSpec regressor_spec_from_json(const nlohmann::json& j);
nlohmann::json ufv_spec_to_json(const UfvSpec& s);
UfvSpec ufv_spec_from_json(const nlohmann::json& j);
nlohmann::json anchor_config_json(const AnchorConfig& c);
AnchorConfig anchor_config_from_json_meta(const nlohmann::json& j);

// Atomic write of <path> (parameter archive, hash-trailed) and <path>.json
// (sidecar). Returns the params hash.
std::string save_checkpoint(const ParamList<float>& params, CheckpointMeta meta,
                            const std::string& path);

struct LoadedCheckpoint {
    std::vector<std::pair<std::string, Tensor>> params;  // archive order
    CheckpointMeta meta;

    const Tensor* find(const std::string& name) const;
};

// Verifies the embedded hash before anything else; corrupt archives never
// come back as data.
LoadedCheckpoint load_checkpoint(const std::string& path);

// Match loaded tensors into a live parameter list by name. Every destination
// name must be present with an identical shape (first offender reported). With
// allow_extra, archive entries without a destination are skipped (a notice is
// logged naming how many and which prefix), which is what integrated assembly
// wants when dropping branch tails.
void load_into(const LoadedCheckpoint& ck, ParamList<float>& dst, bool allow_extra);

std::string utc_timestamp();

}  // namespace ufv
