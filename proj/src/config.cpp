#include "config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ufv {

const std::vector<ConfigEntry>& config_schema() {
    static const std::vector<ConfigEntry> schema = {
        {"dataset.hr_size", 128, "HR side length in pixels (multiple of 8)"},
        {"dataset.anchors", json::array({"1/8", "1/4", "1/2"}), "anchor down-sampling rates"},
        {"dataset.preset", "mr8", "rate-set preset for dataset builds (mr3|mr7|mr8)"},
        {"dataset.train_frac", 0.9, "fraction of the corpus that goes to the train split"},
        {"model.base_ch", 32, "base channel width C of every attention unit stack"},
        {"model.variant", "full", "ufvnet variant (full|nw|fm)"},
        {"model.global_skip", true, "add the bicubic-upscaled input to the decoder output"},
        {"model.regressor_conv", json::array({16, 32, 48, 48, 32}),
         "weight-regressor conv channels (5 stages)"},
        {"model.regressor_fc", json::array({128, 64}), "weight-regressor hidden FC widths"},
        {"train.batch_size", 32, "samples per optimization step"},
        {"train.lr", 2e-4, "Adam learning rate (fixed, no schedule)"},
        {"train.beta1", 0.9, "Adam beta1"},
        {"train.beta2", 0.999, "Adam beta2"},
        {"train.alpha", 0.1, "weight-loss coefficient in the integrated total loss"},
        {"train.max_steps", 2000, "optimization steps for the stage"},
        {"train.seed", 1234, "seed fixing init, shuffling and everything stochastic"},
        {"train.log_every", 50, "loss-curve logging cadence in steps"},
        {"train.ckpt_every", 1000, "intermediate checkpoint cadence in steps"},
        {"train.freeze_regressor", false, "freeze regressor weights during integrated training"},
        {"train.freeze_encoders", false, "freeze anchor encoders during integrated training"},
        {"train.from_scratch", false, "integrated training without stage-1 checkpoints"},
        {"train.decoder_init", "anchor",
         "final-decoder init: 'anchor' copies the middle anchor's decoder, 'fresh' is random"},
        {"eval.metric_mode", "rgb", "metric color handling (rgb|y601)"},
        {"eval.batch_size", 16, "inference batch size during evaluation"},
        {"eval.montage_rows", 8, "max montage rows (one per rate)"},
        {"eval.save_sr", false, "write every SR output PNG next to the report"},
        {"corpus.count", 2000, "synthetic corpus: number of face crops"},
        {"corpus.size", 64, "synthetic corpus: crop side length"},
        {"corpus.seed", 77, "synthetic corpus: generation seed"},
    };
    return schema;
}

namespace {

void set_dot(json& root, const std::string& key, const json& value) {
    json* node = &root;
    size_t start = 0;
    while (true) {
        size_t dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

bool known_key(const std::string& key) {
    for (const auto& e : config_schema())
        if (key == e.key) return true;
    return false;
}

void collect_keys(const json& node, const std::string& prefix, std::vector<std::string>& out) {
    if (!node.is_object()) {
        out.push_back(prefix);
        return;
    }
    for (auto it = node.begin(); it != node.end(); ++it)
        collect_keys(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
}

}  // namespace

json default_config() {
    json cfg = json::object();
    for (const auto& e : config_schema()) set_dot(cfg, e.key, e.def);
    return cfg;
}

json config_at(const json& cfg, const std::string& dot_path) {
    const json* node = &cfg;
    size_t start = 0;
    while (true) {
        size_t dot = dot_path.find('.', start);
        std::string part = dot_path.substr(start, dot == std::string::npos ? dot : dot - start);
        auto it = node->find(part);
        if (it == node->end()) throw InvalidArgument("unknown config key: " + dot_path);
        if (dot == std::string::npos) return *it;
        node = &*it;
        start = dot + 1;
    }
}

json load_config(const std::optional<std::string>& config_file,
                 const std::vector<std::string>& overrides) {
    json cfg = default_config();

    if (config_file) {
        std::ifstream f(*config_file);
        if (!f) throw InvalidArgument("cannot open config file: " + *config_file);
        json file_cfg;
        try {
            f >> file_cfg;
        } catch (const json::exception& e) {
            throw InvalidArgument("malformed config file " + *config_file + ": " + e.what());
        }
        std::vector<std::string> keys;
        collect_keys(file_cfg, "", keys);
        for (const auto& k : keys) {
            if (!known_key(k)) throw InvalidArgument("unknown config key in file: " + k);
            set_dot(cfg, k, config_at(file_cfg, k));
        }
    }

    for (const auto& ov : overrides) {
        size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("override must look like key=value, got '" + ov + "'");
        std::string key = ov.substr(0, eq);
        std::string raw = ov.substr(eq + 1);
        if (!known_key(key)) throw InvalidArgument("unknown config key: " + key);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::exception&) {
            value = raw;  // bare strings are fine
        }
        set_dot(cfg, key, value);
    }
    return cfg;
}

std::string config_help_text() {
    std::ostringstream os;
    os << "Configuration keys (config file JSON paths, or --set key=value):\n";
    for (const auto& e : config_schema()) {
        os << "  " << e.key << " = " << e.def.dump() << "\n      " << e.help << "\n";
    }
    return os.str();
}

void prepare_out_dir(const std::string& dir, bool force) {
    fs::path p(dir);
    if (fs::exists(p)) {
        if (!fs::is_directory(p)) throw InvalidArgument("output path is not a directory: " + dir);
        if (!fs::is_empty(p) && !force)
            throw InvalidArgument("output directory not empty (use --force to reuse): " + dir);
    }
    fs::create_directories(p);
}

}  // namespace ufv
