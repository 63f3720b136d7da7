#include "ufvnet.h"

#include "config.hpp"
#include "dataset.hpp"
#include "evaluate.hpp"
#include "resize.hpp"
#include "runmeta.hpp"
#include "sha256.hpp"
#include "synth.hpp"
#include "train.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_result(char** slot, const std::string& s) {
    if (slot) *slot = dup_string(s);
}

template <typename Fn>
ufv_status guarded(Fn&& fn) {
    try {
        fn();
        return UFV_OK;
    } catch (const ufv::InvalidArgument& e) {
        g_last_error = e.what();
        return UFV_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return UFV_ERROR;
    }
}

json parse_opts(const char* opts_json) {
    if (!opts_json) throw ufv::InvalidArgument("null options");
    try {
        return json::parse(opts_json);
    } catch (const json::exception& e) {
        throw ufv::InvalidArgument(std::string("malformed options JSON: ") + e.what());
    }
}

// options carry a full effective config under "config"; missing keys fall
// back to defaults
json effective_config(const json& opts) {
    json cfg = ufv::default_config();
    if (opts.contains("config")) cfg.merge_patch(opts["config"]);
    return cfg;
}

ufv::AnchorConfig anchor_config_from_cfg(const json& cfg) {
    ufv::AnchorConfig ac;
    ac.hr_size = cfg.at("dataset").at("hr_size").get<int>();
    ac.anchors.clear();
    for (const auto& a : cfg.at("dataset").at("anchors"))
        ac.anchors.push_back(ufv::parse_fraction(a.get<std::string>()));
    ac.rate_set = ufv::rate_preset(cfg.at("dataset").at("preset").get<std::string>());
    ac.validate();
    return ac;
}

}  // namespace

extern "C" {

const char* ufv_version(void) { return ufv::kToolVersion; }

const char* ufv_last_error(void) { return g_last_error.c_str(); }

void ufv_string_free(char* s) { std::free(s); }

ufv_status ufv_config_default(char** config_json) {
    return guarded([&] { set_result(config_json, ufv::default_config().dump(2)); });
}

ufv_status ufv_config_help(char** text) {
    return guarded([&] { set_result(text, ufv::config_help_text()); });
}

ufv_status ufv_make_corpus(const char* opts_json, char** result_json) {
    return guarded([&] {
        json opts = parse_opts(opts_json);
        json cfg = effective_config(opts);
        std::string out_dir = opts.at("out_dir").get<std::string>();
        ufv::prepare_out_dir(out_dir, opts.value("force", false));
        int count = cfg.at("corpus").at("count").get<int>();
        int size = cfg.at("corpus").at("size").get<int>();
        uint64_t seed = cfg.at("corpus").at("seed").get<uint64_t>();

        // generation is seeded, so a UFV_CACHE_DIR hit only saves time
        bool cache_hit = false;
        const char* cache_root = std::getenv("UFV_CACHE_DIR");
        fs::path cache_dir;
        if (cache_root && *cache_root) {
            cache_dir = fs::path(cache_root) /
                        ("corpus_" + std::to_string(size) + "x" + std::to_string(size) + "_" +
                         std::to_string(count) + "_" + std::to_string(seed));
            if (fs::is_directory(cache_dir)) {
                size_t copied = 0;
                for (const auto& e : fs::directory_iterator(cache_dir))
                    if (e.is_regular_file()) {
                        fs::copy_file(e.path(), fs::path(out_dir) / e.path().filename(),
                                      fs::copy_options::overwrite_existing);
                        ++copied;
                    }
                cache_hit = copied == size_t(count);
            }
        }
        if (!cache_hit) {
            ufv::make_corpus(out_dir, count, size, seed);
            if (!cache_dir.empty()) {
                fs::path staging = cache_dir;
                staging += ".tmp";
                fs::remove_all(staging);
                fs::create_directories(staging);
                for (const auto& e : fs::directory_iterator(out_dir))
                    if (e.is_regular_file())
                        fs::copy_file(e.path(), staging / e.path().filename());
                fs::remove_all(cache_dir);
                fs::rename(staging, cache_dir);
            }
        }
        json res = {{"out_dir", out_dir},
                    {"count", count},
                    {"size", size},
                    {"seed", seed},
                    {"cache_hit", cache_hit}};
        set_result(result_json, res.dump(2));
    });
}

ufv_status ufv_build_dataset(const char* opts_json, char** result_json) {
    return guarded([&] {
        json opts = parse_opts(opts_json);
        json cfg = effective_config(opts);
        std::string corpus = opts.at("corpus").get<std::string>();
        std::string out_dir = opts.at("out_dir").get<std::string>();
        std::string split = opts.value("split", "train");
        ufv::prepare_out_dir(out_dir, opts.value("force", false));

        ufv::AnchorConfig ac = anchor_config_from_cfg(cfg);
        double train_frac = cfg.at("dataset").at("train_frac").get<double>();
        ufv::BuildResult br = ufv::build_dataset(corpus, ac, split, train_frac, out_dir);

        ufv::RunManifest rm;
        rm.command = "build-dataset";
        rm.effective_config = cfg;
        rm.seed = 0;
        rm.dataset_path = "manifest.jsonl";
        rm.dataset_sha256 = ufv::sha256_file_hex(br.manifest_path);
        ufv::write_run_manifest(rm, out_dir);

        json res = {{"manifest", br.manifest_path},
                    {"n_images", br.n_images},
                    {"n_records", br.n_records},
                    {"n_skipped", br.n_skipped}};
        set_result(result_json, res.dump(2));
    });
}

ufv_status ufv_train(const char* opts_json, char** result_json) {
    return guarded([&] {
        json opts = parse_opts(opts_json);
        json cfg = effective_config(opts);
        std::string stage = opts.at("stage").get<std::string>();
        std::string manifest = opts.at("manifest").get<std::string>();
        std::string out_dir = opts.at("out_dir").get<std::string>();
        ufv::prepare_out_dir(out_dir, opts.value("force", false));

        ufv::StageResult sr;
        if (stage == "anchor") {
            int index = opts.at("anchor_index").get<int>();
            sr = ufv::train_anchor(manifest, index, cfg, out_dir);
        } else if (stage == "regressor") {
            sr = ufv::train_regressor(manifest, cfg, out_dir);
        } else if (stage == "integrated") {
            std::vector<std::string> anchor_ckpts =
                opts.value("anchor_ckpts", std::vector<std::string>{});
            std::string reg_ckpt = opts.value("regressor_ckpt", std::string());
            sr = ufv::train_integrated(anchor_ckpts, reg_ckpt, manifest, cfg, out_dir);
        } else {
            throw ufv::InvalidArgument("unknown stage '" + stage +
                                       "' (expected anchor|regressor|integrated)");
        }
        json res = {{"checkpoint", sr.checkpoint_path},
                    {"loss_curve", sr.loss_csv_path},
                    {"first_loss", sr.first_loss},
                    {"final_loss", sr.final_loss}};
        if (!sr.extra.is_null()) res["extra"] = sr.extra;
        set_result(result_json, res.dump(2));
    });
}

ufv_status ufv_evaluate(const char* opts_json, char** result_json) {
    return guarded([&] {
        json opts = parse_opts(opts_json);
        json cfg = effective_config(opts);
        std::string manifest = opts.at("manifest").get<std::string>();
        std::string out_dir = opts.at("out_dir").get<std::string>();
        std::string tag = opts.value("dataset_tag", std::string());
        if (tag.empty()) tag = fs::path(manifest).parent_path().filename().string();
        if (tag.empty()) tag = "dataset";
        ufv::prepare_out_dir(out_dir, opts.value("force", false));

        std::vector<ufv::MethodSpec> methods;
        for (const auto& m : opts.at("methods"))
            methods.push_back({m.at("label").get<std::string>(), m.value("ckpt", std::string())});

        ufv::EvalOutput eo = ufv::run_evaluation(methods, manifest, cfg, out_dir, tag);
        json res = {{"report", eo.report_csv},
                    {"samples", eo.samples_csv},
                    {"montage", eo.montage_png}};
        json reps = json::array();
        for (const auto& r : eo.reports) {
            json rows = json::array();
            for (const auto& row : r.per_rate)
                rows.push_back({{"rate", row.rate},
                                {"n", row.n},
                                {"psnr_db", row.psnr_db},
                                {"ssim", row.ssim}});
            reps.push_back({{"method", r.method},
                            {"dataset", r.dataset},
                            {"rows", rows},
                            {"aggregate_psnr_db", r.aggregate.psnr_db},
                            {"aggregate_ssim", r.aggregate.ssim},
                            {"n", r.aggregate.n}});
        }
        res["reports"] = reps;
        set_result(result_json, res.dump(2));
    });
}

ufv_status ufv_report(const char* opts_json, char** result_json) {
    return guarded([&] {
        json opts = parse_opts(opts_json);
        std::vector<std::string> inputs = opts.at("inputs").get<std::vector<std::string>>();
        if (inputs.empty()) throw ufv::InvalidArgument("report: no input CSVs");
        std::string out = opts.at("out").get<std::string>();
        std::vector<ufv::EvalReport> merged;
        for (const auto& path : inputs) {
            auto reports = ufv::read_report_csv(path);
            for (auto& r : reports) merged.push_back(std::move(r));
        }
        ufv::write_report_csv(merged, out);
        json res = {{"out", out}, {"n_methods", merged.size()}};
        set_result(result_json, res.dump(2));
    });
}

ufv_status ufv_lint(const char* root_dir, char** result_json) {
    return guarded([&] {
        if (!root_dir) throw ufv::InvalidArgument("null lint root");
        auto problems = ufv::lint_artifacts(root_dir);
        json res = {{"clean", problems.empty()}, {"problems", problems}};
        set_result(result_json, res.dump(2));
        if (!problems.empty())
            throw ufv::RuntimeFailure("lint found " + std::to_string(problems.size()) +
                                      " problem(s) under " + std::string(root_dir));
    });
}

// ------------------------------------------------------------ model handle --

struct ufv_model {
    ufv::ModelRunner runner;
    explicit ufv_model(const std::string& path) : runner(path) {}
};

ufv_status ufv_model_open(const char* checkpoint_path, ufv_model** out) {
    return guarded([&] {
        if (!checkpoint_path || !out) throw ufv::InvalidArgument("null argument");
        *out = new ufv_model(checkpoint_path);
    });
}

void ufv_model_close(ufv_model* m) { delete m; }

ufv_status ufv_model_info(ufv_model* m, char** info_json) {
    return guarded([&] {
        if (!m) throw ufv::InvalidArgument("null model");
        json anchors = json::array();
        for (const auto& a : m->runner.anchors()) anchors.push_back(a.str());
        json res = {{"kind", m->runner.kind()},
                    {"hr_size", m->runner.hr_size()},
                    {"param_count", m->runner.param_count()},
                    {"anchors", anchors},
                    {"spec", m->runner.meta().spec},
                    {"stage", m->runner.meta().stage.stage},
                    {"params_sha256", m->runner.meta().params_sha256}};
        set_result(info_json, res.dump(2));
    });
}

ufv_status ufv_model_infer_file(ufv_model* m, const char* lr_image_path,
                                const char* sr_png_path, char** weights_json) {
    return guarded([&] {
        if (!m || !lr_image_path || !sr_png_path) throw ufv::InvalidArgument("null argument");
        const int hr = m->runner.hr_size();
        ufv::Image lr = ufv::load_image(lr_image_path);
        if (lr.h > hr || lr.w > hr)
            throw ufv::InvalidArgument("input " + std::to_string(lr.w) + "x" +
                                       std::to_string(lr.h) + " exceeds the HR target " +
                                       std::to_string(hr) + "x" + std::to_string(hr));
        ufv::Image ls = ufv::bicubic_resize(lr, hr, hr);
        ufv::Tensor x({1, 3, hr, hr});
        ufv::image_to_chw(ls, x.data());
        double rate = double(lr.h) / double(hr);
        auto [sr, w] = m->runner.run(x, {rate});

        // inference output is clamped to [0,1] before quantization
        ufv::Image out_img = ufv::chw_to_image(sr.data(), 3, hr, hr);
        ufv::save_png(out_img, sr_png_path);

        json wj = json::array();
        for (int i = 0; i < (w.empty() ? 0 : w.dim(1)); ++i) wj.push_back(double(w.at(0, i)));
        json anchors = json::array();
        for (const auto& a : m->runner.anchors()) anchors.push_back(a.str());
        json res = {{"weights", wj},
                    {"anchors", anchors},
                    {"input", {{"w", lr.w}, {"h", lr.h}}},
                    {"rate", rate},
                    {"output", sr_png_path}};
        set_result(weights_json, res.dump(2));
    });
}

}  // extern "C"
