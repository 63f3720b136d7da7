// ufv: dataset building, two-stage training, evaluation, inference and
// reporting for the unified multi-anchor face super-resolution network.
// Thin shell over the ufvnet C API; all heavy lifting lives in the library.

#include <ufvnet.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;

namespace {

struct CommonOpts {
    std::optional<std::string> config_file;
    std::vector<std::string> overrides;
    std::optional<long long> seed;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "JSON config file (keys listed in `ufv --help`)");
    cmd->add_option("--set", o.overrides, "config override key=value (repeatable)")
        ->type_name("KEY=VALUE");
    cmd->add_option("--seed", o.seed, "override train.seed and corpus.seed in one flag");
    cmd->add_flag("--force", o.force, "reuse a non-empty --out-dir");
}

// Builds the effective config by asking the library for defaults, then
// layering the file and the --set overrides. The library re-validates keys.
json build_config(const CommonOpts& o) {
    char* text = nullptr;
    if (ufv_config_default(&text) != UFV_OK) throw std::runtime_error(ufv_last_error());
    json cfg = json::parse(text);
    ufv_string_free(text);

    if (o.config_file) {
        std::ifstream f(*o.config_file);
        if (!f) throw CLI::ValidationError("--config", "cannot open " + *o.config_file);
        json file_cfg;
        f >> file_cfg;
        cfg.merge_patch(file_cfg);
    }
    for (const auto& ov : o.overrides) {
        size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--set", "expected key=value, got '" + ov + "'");
        std::string key = ov.substr(0, eq);
        std::string raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::exception&) {
            value = raw;
        }
        json* node = &cfg;
        size_t start = 0;
        while (true) {
            size_t dot = key.find('.', start);
            std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
            if (!node->contains(part))
                throw CLI::ValidationError("--set", "unknown config key: " + key);
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            node = &(*node)[part];
            start = dot + 1;
        }
    }
    if (o.seed) {
        cfg["train"]["seed"] = *o.seed;
        cfg["corpus"]["seed"] = *o.seed;
    }
    return cfg;
}

int run_op(ufv_status (*fn)(const char*, char**), const json& opts, bool quiet = false) {
    char* result = nullptr;
    ufv_status st = fn(opts.dump().c_str(), &result);
    if (st != UFV_OK) {
        std::cerr << "error: " << ufv_last_error() << "\n";
        if (st == UFV_INVALID_ARGUMENT) std::cerr << "run 'ufv --help' for usage\n";
        ufv_string_free(result);
        return int(st);
    }
    if (result && !quiet) std::cout << result << "\n";
    ufv_string_free(result);
    return 0;
}

std::string config_help_footer() {
    char* text = nullptr;
    if (ufv_config_help(&text) != UFV_OK) return "";
    std::string s = text;
    ufv_string_free(text);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unified multi-anchor face super-resolution toolkit", "ufv"};
    app.require_subcommand(1);
    app.footer(config_help_footer());
    app.set_version_flag("--version", std::string(ufv_version()));

    // ---- make-corpus
    auto* c_corpus = app.add_subcommand("make-corpus", "generate a synthetic face-crop corpus");
    CommonOpts corpus_opts;
    std::string corpus_out;
    c_corpus->add_option("--out-dir", corpus_out, "output directory")->required();
    add_common(c_corpus, corpus_opts);

    // ---- build-dataset
    auto* c_build = app.add_subcommand("build-dataset",
                                       "build a multi-resolution LR/HR dataset from HR crops");
    CommonOpts build_opts;
    std::string build_corpus, build_out, build_split = "train", build_preset, build_anchors;
    long long build_hr = 0;
    c_build->add_option("--corpus", build_corpus, "directory of HR face crops (PNG/JPEG)")
        ->required();
    c_build->add_option("--out-dir", build_out, "output directory")->required();
    c_build->add_option("--split", build_split, "train|test")->check(CLI::IsMember({"train", "test"}));
    c_build->add_option("--preset", build_preset, "rate preset mr3|mr7|mr8 (shortcut for dataset.preset)");
    c_build->add_option("--hr-size", build_hr, "HR side length (shortcut for dataset.hr_size)");
    c_build->add_option("--anchors", build_anchors,
                        "comma-separated anchor rates (shortcut for dataset.anchors)");
    add_common(c_build, build_opts);

    // ---- train
    auto* c_train = app.add_subcommand("train", "run a training stage");
    c_train->require_subcommand(1);
    struct TrainArgs {
        CommonOpts common;
        std::string manifest, out_dir;
        long long index = 0;
        std::vector<std::string> anchor_ckpts;
        std::string regressor_ckpt;
        std::string variant;
        long long max_steps = -1;
    };
    TrainArgs ta_anchor, ta_reg, ta_int;

    auto add_train_common = [](CLI::App* cmd, TrainArgs& ta) {
        cmd->add_option("--manifest", ta.manifest, "dataset manifest (train split)")->required();
        cmd->add_option("--out-dir", ta.out_dir, "run directory")->required();
        cmd->add_option("--max-steps", ta.max_steps, "shortcut for train.max_steps");
        add_common(cmd, ta.common);
    };
    auto* c_train_anchor =
        c_train->add_subcommand("anchor", "stage 1: one anchor SR generator at its own rate");
    c_train_anchor->add_option("--index", ta_anchor.index, "anchor index (0-based)")->required();
    add_train_common(c_train_anchor, ta_anchor);

    auto* c_train_reg =
        c_train->add_subcommand("regressor", "stage 1: the soft-label weight regressor");
    add_train_common(c_train_reg, ta_reg);

    auto* c_train_int = c_train->add_subcommand(
        "integrated", "stage 2: assemble stage-1 checkpoints and train the retained graph");
    c_train_int->add_option("--anchor-ckpt", ta_int.anchor_ckpts,
                            "stage-1 anchor checkpoint, once per anchor (in anchor order)");
    c_train_int->add_option("--regressor-ckpt", ta_int.regressor_ckpt,
                            "stage-1 regressor checkpoint");
    c_train_int->add_option("--variant", ta_int.variant,
                            "shortcut for model.variant (full|nw|fm)");
    add_train_common(c_train_int, ta_int);

    // ---- eval
    auto* c_eval = app.add_subcommand("eval", "PSNR/SSIM evaluation with per-rate breakdown");
    CommonOpts eval_opts;
    std::string eval_manifest, eval_out, eval_method = "bicubic", eval_ckpt, eval_compare,
                eval_tag;
    c_eval->add_option("--manifest", eval_manifest, "dataset manifest (test split)")->required();
    c_eval->add_option("--out-dir", eval_out, "output directory")->required();
    c_eval->add_option("--method", eval_method, "bicubic|checkpoint")
        ->check(CLI::IsMember({"bicubic", "checkpoint"}));
    c_eval->add_option("--checkpoint", eval_ckpt, "model checkpoint (for --method checkpoint)");
    c_eval->add_option("--compare", eval_compare,
                       "comma list: bicubic and/or checkpoint paths, one merged report");
    c_eval->add_option("--dataset-tag", eval_tag, "dataset name used in the report");
    add_common(c_eval, eval_opts);

    // ---- infer
    auto* c_infer = app.add_subcommand("infer", "super-resolve one LR image");
    std::string infer_ckpt, infer_input, infer_output;
    c_infer->add_option("--checkpoint", infer_ckpt, "trained checkpoint")->required();
    c_infer->add_option("--input", infer_input, "LR image (PNG/JPEG), side <= HR size")
        ->required();
    c_infer->add_option("--output", infer_output, "SR PNG path")->required();

    // ---- report
    auto* c_report = app.add_subcommand("report", "merge evaluation report CSVs");
    std::vector<std::string> report_inputs;
    std::string report_out;
    c_report->add_option("--inputs", report_inputs, "report.csv files to merge")->required();
    c_report->add_option("--out", report_out, "merged CSV path")->required();

    // ---- lint
    auto* c_lint = app.add_subcommand("lint", "check artifact/run-manifest integrity in a tree");
    std::string lint_root;
    c_lint->add_option("root", lint_root, "directory to lint")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion")
            return app.exit(e);
        std::cerr << "error: " << e.what() << "\nrun 'ufv --help' for usage\n";
        return 2;
    }

    try {
        if (*c_corpus) {
            json opts = {{"out_dir", corpus_out},
                         {"force", corpus_opts.force},
                         {"config", build_config(corpus_opts)}};
            return run_op(ufv_make_corpus, opts);
        }
        if (*c_build) {
            json cfg = build_config(build_opts);
            if (!build_preset.empty()) cfg["dataset"]["preset"] = build_preset;
            if (build_hr > 0) cfg["dataset"]["hr_size"] = build_hr;
            if (!build_anchors.empty()) {
                json arr = json::array();
                std::stringstream ss(build_anchors);
                std::string part;
                while (std::getline(ss, part, ',')) arr.push_back(part);
                cfg["dataset"]["anchors"] = arr;
            }
            json opts = {{"corpus", build_corpus},
                         {"out_dir", build_out},
                         {"split", build_split},
                         {"force", build_opts.force},
                         {"config", cfg}};
            return run_op(ufv_build_dataset, opts);
        }
        if (*c_train) {
            TrainArgs* ta = nullptr;
            std::string stage;
            if (*c_train_anchor) {
                ta = &ta_anchor;
                stage = "anchor";
            } else if (*c_train_reg) {
                ta = &ta_reg;
                stage = "regressor";
            } else {
                ta = &ta_int;
                stage = "integrated";
            }
            json cfg = build_config(ta->common);
            if (ta->max_steps >= 0) cfg["train"]["max_steps"] = ta->max_steps;
            if (!ta->variant.empty()) cfg["model"]["variant"] = ta->variant;
            json opts = {{"stage", stage},
                         {"manifest", ta->manifest},
                         {"out_dir", ta->out_dir},
                         {"force", ta->common.force},
                         {"anchor_index", ta->index},
                         {"anchor_ckpts", ta->anchor_ckpts},
                         {"regressor_ckpt", ta->regressor_ckpt},
                         {"config", cfg}};
            return run_op(ufv_train, opts);
        }
        if (*c_eval) {
            json methods = json::array();
            if (!eval_compare.empty()) {
                std::stringstream ss(eval_compare);
                std::string part;
                while (std::getline(ss, part, ',')) {
                    if (part == "bicubic")
                        methods.push_back({{"label", "bicubic"}});
                    else {
                        std::string label = part.substr(part.find_last_of('/') + 1);
                        size_t dot = label.find(".ufvckpt");
                        if (dot != std::string::npos) label = label.substr(0, dot);
                        methods.push_back({{"label", label}, {"ckpt", part}});
                    }
                }
            } else if (eval_method == "bicubic") {
                methods.push_back({{"label", "bicubic"}});
            } else {
                if (eval_ckpt.empty()) {
                    std::cerr << "error: --method checkpoint needs --checkpoint\n";
                    return 2;
                }
                methods.push_back({{"label", "model"}, {"ckpt", eval_ckpt}});
            }
            json opts = {{"manifest", eval_manifest},
                         {"out_dir", eval_out},
                         {"force", eval_opts.force},
                         {"methods", methods},
                         {"config", build_config(eval_opts)}};
            if (!eval_tag.empty()) opts["dataset_tag"] = eval_tag;
            return run_op(ufv_evaluate, opts);
        }
        if (*c_infer) {
            ufv_model* model = nullptr;
            ufv_status st = ufv_model_open(infer_ckpt.c_str(), &model);
            if (st != UFV_OK) {
                std::cerr << "error: " << ufv_last_error() << "\n";
                return int(st);
            }
            char* weights = nullptr;
            st = ufv_model_infer_file(model, infer_input.c_str(), infer_output.c_str(),
                                      &weights);
            if (st != UFV_OK) {
                std::cerr << "error: " << ufv_last_error() << "\n";
                ufv_model_close(model);
                return int(st);
            }
            std::cout << weights << "\n";
            ufv_string_free(weights);
            ufv_model_close(model);
            return 0;
        }
        if (*c_report) {
            json opts = {{"inputs", report_inputs}, {"out", report_out}};
            return run_op(ufv_report, opts);
        }
        if (*c_lint) {
            char* result = nullptr;
            ufv_status st = ufv_lint(lint_root.c_str(), &result);
            if (result) std::cout << result << "\n";
            ufv_string_free(result);
            if (st != UFV_OK) std::cerr << "error: " << ufv_last_error() << "\n";
            return int(st);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
