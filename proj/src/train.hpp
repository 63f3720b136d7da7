#pragma once

#include "checkpoint.hpp"
#include "dataset.hpp"

#include <json.hpp>

namespace ufv {

struct TrainConfig {
    int batch_size = 32;
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double alpha = 0.1;
    int64_t max_steps = 2000;
    uint64_t seed = 1234;
    int64_t log_every = 50;
    int64_t ckpt_every = 1000;
    bool freeze_regressor = false;
    bool freeze_encoders = false;
    bool from_scratch = false;
    std::string decoder_init = "anchor";  // anchor | fresh

    static TrainConfig from_json(const nlohmann::json& cfg);
    void validate() const;
};

struct StageResult {
    std::string checkpoint_path;
    std::string loss_csv_path;
    double first_loss = 0.0;
    double final_loss = 0.0;
    nlohmann::json extra;  // stage-specific (e.g. per-rate accuracy)
};

// batch packing: bicubic-upscaled inputs (I_LS), targets, labels
Tensor pack_ls(const Batch& b, int hr_size);
Tensor pack_hr(const Batch& b);
Tensor pack_weights(const Batch& b);
std::vector<double> pack_rates(const Batch& b);

// Stage 1a: one anchor SR generator on its own rate, L1 loss.
StageResult train_anchor(const std::string& manifest_path, int anchor_index,
                         const nlohmann::json& cfg, const std::string& out_dir);

// Stage 1b: the weight regressor as a soft classifier over the full rate set.
StageResult train_regressor(const std::string& manifest_path, const nlohmann::json& cfg,
                            const std::string& out_dir);

// Stage 2: assemble the retained graph from stage-1 checkpoints (branch tails
// dropped, final decoder seeded from the middle anchor) and train end to end
// with L_sr + alpha * L_wt on the full manifest.
StageResult train_integrated(const std::vector<std::string>& anchor_ckpts,
                             const std::string& regressor_ckpt,
                             const std::string& manifest_path, const nlohmann::json& cfg,
                             const std::string& out_dir);

}  // namespace ufv
