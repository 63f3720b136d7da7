#include "train.hpp"

#include "adam.hpp"
#include "losses.hpp"
#include "resize.hpp"
#include "runmeta.hpp"
#include "sha256.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using json = nlohmann::json;

namespace ufv {

namespace {

// derived seed streams per stage so stages don't share randomness
constexpr uint64_t kSaltInit = 11;
constexpr uint64_t kSaltLoader = 29;

class LossCurve {
  public:
    explicit LossCurve(const std::string& path) : f_(path) {
        if (!f_) throw RuntimeFailure("cannot write loss curve: " + path);
        f_.precision(17);  // lossless double round-trip; total == sr + alpha*wt stays exact
        f_ << "step,loss_sr,loss_wt,loss_total\n";
    }
    void log(int64_t step, double sr, double wt, double total) {
        f_ << step << "," << sr << "," << wt << "," << total << "\n";
    }
    void flush() { f_.flush(); }

  private:
    std::ofstream f_;
};

std::string stage_ckpt_name(const std::string& base, int64_t step, bool final_step) {
    if (final_step) return base + ".ufvckpt";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_step%06lld", static_cast<long long>(step));
    return base + buf + ".ufvckpt";
}

RegressorSpec regressor_spec_from_cfg(const json& cfg, int hr_size, int k) {
    RegressorSpec rs;
    rs.input_size = hr_size;
    rs.k = k;
    auto cc = cfg.at("model").at("regressor_conv").get<std::vector<int>>();
    auto fd = cfg.at("model").at("regressor_fc").get<std::vector<int>>();
    if (cc.size() != 5) throw InvalidArgument("model.regressor_conv needs 5 entries");
    if (fd.size() != 2) throw InvalidArgument("model.regressor_fc needs 2 entries");
    std::copy(cc.begin(), cc.end(), rs.conv_ch.begin());
    std::copy(fd.begin(), fd.end(), rs.fc_dim.begin());
    return rs;
}

}  // namespace

TrainConfig TrainConfig::from_json(const json& cfg) {
    const json& t = cfg.at("train");
    TrainConfig c;
    c.batch_size = t.at("batch_size").get<int>();
    c.lr = t.at("lr").get<double>();
    c.beta1 = t.at("beta1").get<double>();
    c.beta2 = t.at("beta2").get<double>();
    c.alpha = t.at("alpha").get<double>();
    c.max_steps = t.at("max_steps").get<int64_t>();
    c.seed = t.at("seed").get<uint64_t>();
    c.log_every = t.at("log_every").get<int64_t>();
    c.ckpt_every = t.at("ckpt_every").get<int64_t>();
    c.freeze_regressor = t.at("freeze_regressor").get<bool>();
    c.freeze_encoders = t.at("freeze_encoders").get<bool>();
    c.from_scratch = t.at("from_scratch").get<bool>();
    c.decoder_init = t.at("decoder_init").get<std::string>();
    c.validate();
    return c;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw InvalidArgument("train.batch_size must be >= 1");
    if (!(lr > 0)) throw InvalidArgument("train.lr must be > 0");
    if (alpha < 0) throw InvalidArgument("train.alpha must be >= 0");
    if (max_steps < 0) throw InvalidArgument("train.max_steps must be >= 0");
    if (log_every < 1) throw InvalidArgument("train.log_every must be >= 1");
    if (decoder_init != "anchor" && decoder_init != "fresh")
        throw InvalidArgument("train.decoder_init must be 'anchor' or 'fresh'");
}

// ------------------------------------------------------------ batch packing --

Tensor pack_ls(const Batch& b, int hr_size) {
    const int n = int(b.lr.size());
    Tensor x({n, 3, hr_size, hr_size});
    for (int i = 0; i < n; ++i) {
        Image ls = bicubic_resize(b.lr[size_t(i)], hr_size, hr_size);
        image_to_chw(ls, x.data() + size_t(i) * 3 * hr_size * hr_size);
    }
    return x;
}

Tensor pack_hr(const Batch& b) {
    const int n = int(b.hr.size());
    const int h = b.hr[0].h, w = b.hr[0].w;
    Tensor y({n, 3, h, w});
    for (int i = 0; i < n; ++i) image_to_chw(b.hr[size_t(i)], y.data() + size_t(i) * 3 * h * w);
    return y;
}

Tensor pack_weights(const Batch& b) {
    const int n = int(b.records.size());
    const int k = int(b.records[0]->gt_weights.size());
    Tensor w({n, k});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) w.at(i, j) = float(b.records[size_t(i)]->gt_weights[size_t(j)]);
    return w;
}

std::vector<double> pack_rates(const Batch& b) {
    std::vector<double> r(b.records.size());
    for (size_t i = 0; i < b.records.size(); ++i) r[i] = b.records[i]->rate.value();
    return r;
}

// ------------------------------------------------------------- train_anchor --

StageResult train_anchor(const std::string& manifest_path, int anchor_index, const json& cfg,
                         const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest = load_manifest(manifest_path);
    const AnchorConfig& aconf = manifest.config;
    if (anchor_index < 0 || anchor_index >= int(aconf.anchors.size()))
        throw InvalidArgument("anchor index " + std::to_string(anchor_index) +
                              " out of range for " + std::to_string(aconf.anchors.size()) +
                              " anchors");
    TrainConfig tc = TrainConfig::from_json(cfg);
    SrgSpec sspec;
    sspec.hr_size = aconf.hr_size;
    sspec.base_ch = cfg.at("model").at("base_ch").get<int>();
    sspec.global_skip = cfg.at("model").at("global_skip").get<bool>();

    const uint64_t idx = uint64_t(anchor_index);
    BatchLoader loader(manifest, tc.batch_size, /*shuffle=*/true,
                       Rng(tc.seed).fork(kSaltLoader + idx).next_u64(),
                       {aconf.anchors[size_t(anchor_index)]});

    Rng init_rng(Rng(tc.seed).fork(kSaltInit + idx).next_u64());
    Srg<float> model;
    model.init(sspec, init_rng);
    ParamList<float> params = model.params();
    Adam<float> opt(tc.lr, tc.beta1, tc.beta2);

    const std::string stage_name = "anchor-" + std::to_string(anchor_index);
    const std::string ckpt_base = out_dir + "/srg_anchor" + std::to_string(anchor_index);
    LossCurve curve(out_dir + "/loss_curve.csv");

    StageResult result;
    StageState state{stage_name, 0, 0, 0, 0};
    CheckpointMeta meta;
    meta.kind = "srg";
    meta.spec = srg_spec_to_json(sspec);
    meta.anchor_config = anchor_config_json(aconf);
    meta.seed = tc.seed;
    meta.run_manifest = "run.json";

    for (int64_t step = 1; step <= tc.max_steps; ++step) {
        Batch batch = loader.next_batch();
        Tensor x = pack_ls(batch, aconf.hr_size);
        Tensor y = pack_hr(batch);
        Tensor pred = model.forward(x);
        double l_sr = l1_loss(pred, y);
        zero_grads(params);
        model.backward(l1_loss_grad(pred, y));
        opt.step(params);

        double l_total = total_loss(l_sr, 0.0, tc.alpha);
        if (step == 1) result.first_loss = l_sr;
        result.final_loss = l_sr;
        state.step = step;
        state.loss_sr = l_sr;
        state.loss_total = l_total;
        if (step == 1 || step == tc.max_steps || step % tc.log_every == 0)
            curve.log(step, l_sr, 0.0, l_total);
        if (tc.ckpt_every > 0 && step % tc.ckpt_every == 0 && step != tc.max_steps) {
            meta.stage = state;
            save_checkpoint(params, meta, stage_ckpt_name(ckpt_base, step, false));
        }
    }
    curve.flush();

    meta.stage = state;
    result.checkpoint_path = stage_ckpt_name(ckpt_base, state.step, true);
    save_checkpoint(params, meta, result.checkpoint_path);
    result.loss_csv_path = out_dir + "/loss_curve.csv";

    RunManifest rm;
    rm.command = "train-anchor";
    rm.effective_config = cfg;
    rm.seed = tc.seed;
    rm.dataset_path = manifest_path;
    rm.dataset_sha256 = sha256_file_hex(manifest_path);
    write_run_manifest(rm, out_dir);
    return result;
}

// ---------------------------------------------------------- train_regressor --

StageResult train_regressor(const std::string& manifest_path, const json& cfg,
                            const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest = load_manifest(manifest_path);
    const AnchorConfig& aconf = manifest.config;
    TrainConfig tc = TrainConfig::from_json(cfg);
    const int k = int(aconf.anchors.size());
    if (k < 2) throw InvalidArgument("regressor training needs at least 2 anchors");
    for (const auto& rec : manifest.records)
        if (int(rec.gt_weights.size()) != k)
            throw RuntimeFailure("manifest record lacks a " + std::to_string(k) +
                                 "-component weight label: " + rec.lr_path);

    RegressorSpec rspec = regressor_spec_from_cfg(cfg, aconf.hr_size, k);

    BatchLoader loader(manifest, tc.batch_size, /*shuffle=*/true,
                       Rng(tc.seed).fork(kSaltLoader + 100).next_u64());
    Rng init_rng(Rng(tc.seed).fork(kSaltInit + 100).next_u64());
    Regressor<float> model;
    model.init(rspec, init_rng);
    ParamList<float> params = model.params();
    Adam<float> opt(tc.lr, tc.beta1, tc.beta2);

    LossCurve curve(out_dir + "/loss_curve.csv");
    StageResult result;
    StageState state{"regressor", 0, 0, 0, 0};

    for (int64_t step = 1; step <= tc.max_steps; ++step) {
        Batch batch = loader.next_batch();
        Tensor x = pack_ls(batch, aconf.hr_size);
        Tensor t = pack_weights(batch);
        Tensor p = model.forward(x);
        double l_wt = soft_cross_entropy(p, t);
        zero_grads(params);
        model.backward(soft_cross_entropy_grad(p, t));
        opt.step(params);

        double l_total = total_loss(0.0, l_wt, tc.alpha);
        if (step == 1) result.first_loss = l_wt;
        result.final_loss = l_wt;
        state.step = step;
        state.loss_wt = l_wt;
        state.loss_total = l_total;
        if (step == 1 || step == tc.max_steps || step % tc.log_every == 0)
            curve.log(step, 0.0, l_wt, l_total);
    }
    curve.flush();

    // per-rate argmax accuracy over the manifest (deterministic order)
    std::map<std::string, std::pair<int, int>> per_rate;  // rate -> {hits, n}
    {
        BatchLoader eval_loader(manifest, tc.batch_size, /*shuffle=*/false, 0);
        size_t total = eval_loader.size();
        size_t seen = 0;
        while (seen < total) {
            Batch batch = eval_loader.next_batch();
            Tensor x = pack_ls(batch, aconf.hr_size);
            Tensor p = model.forward(x);
            for (size_t i = 0; i < batch.records.size(); ++i) {
                const SampleRecord& rec = *batch.records[i];
                int pred_arg = 0, gt_arg = 0;
                for (int j = 1; j < k; ++j) {
                    if (p.at(int(i), j) > p.at(int(i), pred_arg)) pred_arg = j;
                    if (rec.gt_weights[size_t(j)] > rec.gt_weights[size_t(gt_arg)]) gt_arg = j;
                }
                auto& slot = per_rate[rec.rate.str()];
                slot.second++;
                if (pred_arg == gt_arg) slot.first++;
            }
            seen += batch.records.size();
        }
    }
    json acc = json::object();
    {
        std::ofstream f(out_dir + "/accuracy.csv");
        f << "rate,n,argmax_accuracy\n";
        for (const auto& [rate, hn] : per_rate) {
            double a = hn.second ? double(hn.first) / hn.second : 0.0;
            f << rate << "," << hn.second << "," << a << "\n";
            acc[rate] = a;
        }
    }
    result.extra["per_rate_accuracy"] = acc;

    CheckpointMeta meta;
    meta.kind = "regressor";
    meta.spec = regressor_spec_to_json(rspec);
    meta.anchor_config = anchor_config_json(aconf);
    meta.stage = state;
    meta.seed = tc.seed;
    meta.run_manifest = "run.json";
    result.checkpoint_path = out_dir + "/regressor.ufvckpt";
    save_checkpoint(params, meta, result.checkpoint_path);
    result.loss_csv_path = out_dir + "/loss_curve.csv";

    RunManifest rm;
    rm.command = "train-regressor";
    rm.effective_config = cfg;
    rm.seed = tc.seed;
    rm.dataset_path = manifest_path;
    rm.dataset_sha256 = sha256_file_hex(manifest_path);
    write_run_manifest(rm, out_dir);
    return result;
}

// --------------------------------------------------------- train_integrated --

namespace {

void verify_anchor_checkpoint(const LoadedCheckpoint& ck, int index, const UfvSpec& us,
                              const std::string& path) {
    if (ck.meta.kind != "srg")
        throw RuntimeFailure("expected an anchor SR generator checkpoint at " + path + ", got '" +
                             ck.meta.kind + "'");
    SrgSpec cs = srg_spec_from_json(ck.meta.spec);
    if (cs.hr_size != us.hr_size)
        throw RuntimeFailure(path + ": hr_size " + std::to_string(cs.hr_size) +
                             " does not match configured " + std::to_string(us.hr_size));
    if (cs.base_ch != us.base_ch)
        throw RuntimeFailure(path + ": base_ch " + std::to_string(cs.base_ch) +
                             " does not match configured " + std::to_string(us.base_ch));
    if (cs.global_skip != us.global_skip)
        throw RuntimeFailure(path + ": global_skip setting differs from the configured model");
    AnchorConfig ac = anchor_config_from_json_meta(ck.meta.anchor_config);
    if (ac.anchors.size() != us.anchors.size())
        throw RuntimeFailure(path + ": trained against " + std::to_string(ac.anchors.size()) +
                             " anchors, configured model has " +
                             std::to_string(us.anchors.size()) +
                             " (missing branch checkpoint?)");
    for (size_t i = 0; i < ac.anchors.size(); ++i)
        if (!ac.anchors[i].same_value(us.anchors[i]))
            throw RuntimeFailure(path + ": anchor set mismatch at position " + std::to_string(i));
    std::string expect = "anchor-" + std::to_string(index);
    if (!ck.meta.stage.stage.empty() && ck.meta.stage.stage != expect)
        throw RuntimeFailure(path + ": is stage '" + ck.meta.stage.stage + "' but was passed as " +
                             expect);
}

}  // namespace

StageResult train_integrated(const std::vector<std::string>& anchor_ckpts,
                             const std::string& regressor_ckpt, const std::string& manifest_path,
                             const json& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest = load_manifest(manifest_path);
    const AnchorConfig& aconf = manifest.config;
    TrainConfig tc = TrainConfig::from_json(cfg);

    UfvSpec us;
    us.hr_size = aconf.hr_size;
    us.base_ch = cfg.at("model").at("base_ch").get<int>();
    us.global_skip = cfg.at("model").at("global_skip").get<bool>();
    us.variant = parse_variant(cfg.at("model").at("variant").get<std::string>());
    us.anchors = aconf.anchors;
    us.regressor = regressor_spec_from_cfg(cfg, us.hr_size, us.k());
    us.validate();

    // stage-ordering contract: everything verified before any step runs
    std::vector<LineageEntry> lineage;
    std::vector<LoadedCheckpoint> anchors_loaded;
    std::optional<LoadedCheckpoint> regressor_loaded;
    if (!tc.from_scratch) {
        if (int(anchor_ckpts.size()) != us.k())
            throw RuntimeFailure("integrated training needs " + std::to_string(us.k()) +
                                 " anchor checkpoints (got " +
                                 std::to_string(anchor_ckpts.size()) +
                                 "); pass train.from_scratch=true to skip stage-1 loading");
        for (int i = 0; i < us.k(); ++i) {
            LoadedCheckpoint ck = load_checkpoint(anchor_ckpts[size_t(i)]);
            verify_anchor_checkpoint(ck, i, us, anchor_ckpts[size_t(i)]);
            lineage.push_back({"anchor-" + std::to_string(i), anchor_ckpts[size_t(i)],
                               ck.meta.params_sha256});
            anchors_loaded.push_back(std::move(ck));
        }
        if (us.has_regressor()) {
            if (regressor_ckpt.empty())
                throw RuntimeFailure(
                    "integrated training of the full variant needs a regressor checkpoint "
                    "(or train.from_scratch=true)");
            LoadedCheckpoint ck = load_checkpoint(regressor_ckpt);
            if (ck.meta.kind != "regressor")
                throw RuntimeFailure("expected a regressor checkpoint at " + regressor_ckpt);
            RegressorSpec rs = regressor_spec_from_json(ck.meta.spec);
            if (rs.input_size != us.hr_size || rs.k != us.k())
                throw RuntimeFailure(regressor_ckpt + ": regressor spec (input " +
                                     std::to_string(rs.input_size) + ", k=" +
                                     std::to_string(rs.k) + ") does not fit the configured model");
            us.regressor = rs;
            lineage.push_back({"regressor", regressor_ckpt, ck.meta.params_sha256});
            regressor_loaded = std::move(ck);
        }
    }

    Rng init_rng(Rng(tc.seed).fork(kSaltInit + 200).next_u64());
    UfvNet<float> model;
    model.init(us, init_rng);

    if (!tc.from_scratch) {
        for (int i = 0; i < us.k(); ++i) {
            ParamList<float> enc_list;
            model.branches[size_t(i)].collect(enc_list, "enc");
            load_into(anchors_loaded[size_t(i)], enc_list, /*allow_extra=*/true);
        }
        if (tc.decoder_init == "anchor") {
            // middle anchor's decoder seeds the final decoder
            int mid = us.k() / 2;
            ParamList<float> dec_list;
            model.decoder.collect(dec_list, "tail");
            load_into(anchors_loaded[size_t(mid)], dec_list, /*allow_extra=*/true);
        }
        if (regressor_loaded) {
            ParamList<float> reg_list = model.regressor->params();
            load_into(*regressor_loaded, reg_list, /*allow_extra=*/false);
        }
    }

    // trainable subset per freeze flags
    ParamList<float> all_params = model.params();
    ParamList<float> trainables;
    for (auto& p : all_params) {
        if (tc.freeze_encoders && p.name.rfind("branch", 0) == 0) continue;
        if (tc.freeze_regressor && p.name.rfind("regressor", 0) == 0) continue;
        trainables.push_back(p);
    }

    BatchLoader loader(manifest, tc.batch_size, /*shuffle=*/true,
                       Rng(tc.seed).fork(kSaltLoader + 200).next_u64());
    Adam<float> opt(tc.lr, tc.beta1, tc.beta2);

    LossCurve curve(out_dir + "/loss_curve.csv");
    StageResult result;
    StageState state{"integrated", 0, 0, 0, 0};
    const std::string ckpt_base = out_dir + "/ufvnet_" + us.tag();

    CheckpointMeta meta;
    meta.kind = "ufvnet";
    meta.spec = ufv_spec_to_json(us);
    meta.anchor_config = anchor_config_json(aconf);
    meta.lineage = lineage;
    meta.seed = tc.seed;
    meta.run_manifest = "run.json";

    const bool use_wt_loss = us.has_regressor();
    for (int64_t step = 1; step <= tc.max_steps; ++step) {
        Batch batch = loader.next_batch();
        Tensor x = pack_ls(batch, aconf.hr_size);
        Tensor y = pack_hr(batch);
        std::vector<double> rates =
            us.variant == Variant::fm ? pack_rates(batch) : std::vector<double>{};
        UfvForwardResult<float> res = model.forward(x, rates);

        double l_sr = l1_loss(res.sr, y);
        double l_wt = 0.0;
        Tensor gweights;
        if (use_wt_loss) {
            Tensor t = pack_weights(batch);
            l_wt = soft_cross_entropy(res.weights, t);
            gweights = soft_cross_entropy_grad(res.weights, t);
            for (int64_t i = 0; i < gweights.numel(); ++i) gweights[i] *= float(tc.alpha);
        }
        double l_total = total_loss(l_sr, l_wt, tc.alpha);

        zero_grads(all_params);
        model.backward(l1_loss_grad(res.sr, y), gweights);
        opt.step(trainables);

        if (step == 1) result.first_loss = l_total;
        result.final_loss = l_total;
        state.step = step;
        state.loss_sr = l_sr;
        state.loss_wt = l_wt;
        state.loss_total = l_total;
        if (step == 1 || step == tc.max_steps || step % tc.log_every == 0)
            curve.log(step, l_sr, l_wt, l_total);
        if (tc.ckpt_every > 0 && step % tc.ckpt_every == 0 && step != tc.max_steps) {
            meta.stage = state;
            save_checkpoint(all_params, meta, stage_ckpt_name(ckpt_base, step, false));
        }
    }
    curve.flush();

    meta.stage = state;
    result.checkpoint_path = stage_ckpt_name(ckpt_base, state.step, true);
    save_checkpoint(all_params, meta, result.checkpoint_path);
    result.loss_csv_path = out_dir + "/loss_curve.csv";

    RunManifest rm;
    rm.command = "train-integrated";
    rm.effective_config = cfg;
    rm.seed = tc.seed;
    rm.dataset_path = manifest_path;
    rm.dataset_sha256 = sha256_file_hex(manifest_path);
    rm.lineage = lineage;
    write_run_manifest(rm, out_dir);
    return result;
}

}  // namespace ufv
