#pragma once

#include "dataset.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "checkpoint.hpp"

#include <json.hpp>

namespace ufv {

// Inference-ready model restored from a checkpoint (anchor SR generator or
// the fused network). Spec/shape agreement is verified while loading.
class ModelRunner {
  public:
    explicit ModelRunner(const std::string& ckpt_path);

    const std::string& kind() const { return kind_; }
    int hr_size() const { return hr_size_; }
    const CheckpointMeta& meta() const { return meta_; }
    int64_t param_count();
    std::vector<Fraction> anchors() const;

    // x: [N,3,H,H] upscaled inputs; rates are needed by the fm variant.
    // Returns raw SR [N,3,H,H] and weights [N,k] (empty for srg checkpoints).
    std::pair<Tensor, Tensor> run(const Tensor& x, const std::vector<double>& rates = {});

  private:
    std::string kind_;
    int hr_size_ = 0;
    CheckpointMeta meta_;
    Srg<float> srg_;
    UfvNet<float> net_;
};

struct MethodSpec {
    std::string label;
    std::string ckpt;  // empty => bicubic baseline
};

struct EvalOutput {
    std::vector<EvalReport> reports;
    std::string report_csv;
    std::string samples_csv;
    std::string montage_png;
};

// Evaluates each method over the manifest (deterministic order), writes
// report.csv, samples.csv and montage.png under out_dir.
EvalOutput run_evaluation(const std::vector<MethodSpec>& methods,
                          const std::string& manifest_path, const nlohmann::json& cfg,
                          const std::string& out_dir, const std::string& dataset_tag);

}  // namespace ufv
