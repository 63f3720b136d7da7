#include "evaluate.hpp"

#include "resize.hpp"
#include "montage.hpp"
#include "runmeta.hpp"
#include "sha256.hpp"
#include "train.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace ufv {

ModelRunner::ModelRunner(const std::string& ckpt_path) {
    LoadedCheckpoint ck = load_checkpoint(ckpt_path);
    meta_ = ck.meta;
    kind_ = ck.meta.kind;
    Rng rng(0);  // shapes only; parameters are overwritten from the archive
    if (kind_ == "srg") {
        SrgSpec s = srg_spec_from_json(ck.meta.spec);
        hr_size_ = s.hr_size;
        srg_.init(s, rng);
        ParamList<float> p = srg_.params();
        load_into(ck, p, /*allow_extra=*/false);
    } else if (kind_ == "ufvnet") {
        UfvSpec s = ufv_spec_from_json(ck.meta.spec);
        hr_size_ = s.hr_size;
        net_.init(s, rng);
        ParamList<float> p = net_.params();
        load_into(ck, p, /*allow_extra=*/false);
    } else {
        throw RuntimeFailure("checkpoint kind '" + kind_ + "' is not runnable: " + ckpt_path);
    }
}

int64_t ModelRunner::param_count() {
    ParamList<float> p = kind_ == "srg" ? srg_.params() : net_.params();
    return count_params(p);
}

std::vector<Fraction> ModelRunner::anchors() const {
    if (kind_ == "ufvnet") {
        UfvSpec s = ufv_spec_from_json(meta_.spec);
        return s.anchors;
    }
    return {};
}

std::pair<Tensor, Tensor> ModelRunner::run(const Tensor& x, const std::vector<double>& rates) {
    if (kind_ == "srg") return {srg_.forward(x), Tensor()};
    UfvForwardResult<float> res = net_.forward(x, rates);
    return {std::move(res.sr), std::move(res.weights)};
}

namespace {

Image tensor_slice_to_image(const Tensor& t, int i) {
    return chw_to_image(t.data() + size_t(i) * t.dim(1) * t.dim(2) * t.dim(3), t.dim(1), t.dim(2),
                        t.dim(3));
}

struct SampleMetrics {
    double psnr_db;
    double ssim_v;
};

}  // namespace

EvalOutput run_evaluation(const std::vector<MethodSpec>& methods,
                          const std::string& manifest_path, const json& cfg,
                          const std::string& out_dir, const std::string& dataset_tag) {
    if (methods.empty()) throw InvalidArgument("no evaluation methods given");
    fs::create_directories(out_dir);
    DatasetManifest manifest = load_manifest(manifest_path);
    const int hr = manifest.config.hr_size;
    MetricMode mode = parse_metric_mode(cfg.at("eval").at("metric_mode").get<std::string>());
    const int batch_size = cfg.at("eval").at("batch_size").get<int>();
    const int montage_rows = cfg.at("eval").at("montage_rows").get<int>();
    const bool save_sr = cfg.at("eval").at("save_sr").get<bool>();

    BatchLoader loader(manifest, 1, /*shuffle=*/false, 0);
    const size_t n = loader.size();

    // rates in manifest order -> montage representative (first sample per rate)
    std::vector<std::string> rate_order;
    std::map<std::string, size_t> montage_pick;
    for (size_t i = 0; i < n; ++i) {
        const std::string r = loader.record(i).rate.str();
        if (!montage_pick.count(r)) {
            montage_pick[r] = i;
            rate_order.push_back(r);
        }
    }

    std::ofstream samples(out_dir + "/samples.csv");
    if (!samples) throw RuntimeFailure("cannot write samples csv in " + out_dir);
    samples << "method,dataset,rate,file,psnr_db,ssim\n";

    EvalOutput out;
    std::vector<std::vector<Image>> montage_cells(
        std::min(rate_order.size(), size_t(montage_rows)));
    std::vector<std::string> montage_row_labels;
    for (size_t r = 0; r < montage_cells.size(); ++r) {
        const SampleRecord& rec = loader.record(montage_pick[rate_order[r]]);
        auto [lr, hr_img] = loader.load_pair(rec);
        montage_cells[r].push_back(hr_img);
        montage_row_labels.push_back(std::to_string(lr.w) + "x" + std::to_string(lr.h));
    }
    std::vector<std::string> montage_col_labels = {"HR"};

    for (const auto& method : methods) {
        std::optional<ModelRunner> runner;
        if (!method.ckpt.empty()) {
            runner.emplace(method.ckpt);
            if (runner->hr_size() != hr)
                throw RuntimeFailure("checkpoint " + method.ckpt + " expects hr_size " +
                                     std::to_string(runner->hr_size()) + ", manifest has " +
                                     std::to_string(hr));
        }

        std::map<std::string, std::vector<SampleMetrics>> by_rate;
        std::vector<Image> montage_sr(montage_cells.size());
        fs::path sr_dir = fs::path(out_dir) / ("sr_" + method.label);
        if (save_sr) fs::create_directories(sr_dir);

        for (size_t start = 0; start < n; start += size_t(batch_size)) {
            size_t take = std::min(size_t(batch_size), n - start);
            Batch batch;
            for (size_t i = 0; i < take; ++i) {
                const SampleRecord& rec = loader.record(start + i);
                batch.records.push_back(&rec);
                auto [lr, hr_img] = loader.load_pair(rec);
                batch.lr.push_back(std::move(lr));
                batch.hr.push_back(std::move(hr_img));
            }
            Tensor x = pack_ls(batch, hr);
            Tensor sr_batch;
            if (runner) {
                auto [sr, w] = runner->run(x, pack_rates(batch));
                sr_batch = std::move(sr);
            } else {
                sr_batch = x;  // bicubic baseline: U(I_LR) is the SR output
            }
            for (size_t i = 0; i < take; ++i) {
                const SampleRecord& rec = *batch.records[i];
                Image sr_img = tensor_slice_to_image(sr_batch, int(i));  // clamped to [0,1]
                double p = psnr(sr_img, batch.hr[i], mode);
                double s = ssim(sr_img, batch.hr[i], mode);
                by_rate[rec.rate.str()].push_back({p, s});
                samples << method.label << "," << dataset_tag << "," << rec.rate.str() << ","
                        << rec.lr_path << "," << format_metric(p) << "," << format_metric(s)
                        << "\n";
                size_t global_idx = start + i;
                for (size_t r = 0; r < montage_cells.size(); ++r)
                    if (montage_pick[rate_order[r]] == global_idx) montage_sr[r] = sr_img;
                if (save_sr)
                    save_png(sr_img, (sr_dir / fs::path(rec.lr_path).filename()).string());
            }
        }

        EvalReport rep;
        rep.method = method.label;
        rep.dataset = dataset_tag;
        for (const auto& rate : rate_order) {
            const auto& ms = by_rate[rate];
            EvalRow row;
            row.rate = rate;
            row.n = int(ms.size());
            double psnr_acc = 0, ssim_acc = 0;
            int finite = 0;
            for (const auto& m : ms) {
                ssim_acc += m.ssim_v;
                if (std::isfinite(m.psnr_db)) {
                    psnr_acc += m.psnr_db;
                    ++finite;
                }
            }
            row.n_inf = row.n - finite;
            row.psnr_db = finite ? psnr_acc / finite : std::numeric_limits<double>::infinity();
            row.ssim = row.n ? ssim_acc / row.n : 0.0;
            rep.per_rate.push_back(row);
        }
        rep.finalize();
        rep.check_consistency();
        out.reports.push_back(std::move(rep));

        for (size_t r = 0; r < montage_cells.size(); ++r)
            montage_cells[r].push_back(montage_sr[r]);
        montage_col_labels.push_back(method.label);
    }

    out.report_csv = out_dir + "/report.csv";
    write_report_csv(out.reports, out.report_csv);
    out.samples_csv = out_dir + "/samples.csv";

    // footnote counts for inf-PSNR exclusions
    int total_inf = 0;
    for (const auto& rep : out.reports)
        for (const auto& row : rep.per_rate) total_inf += row.n_inf;
    if (total_inf > 0) {
        json notes;
        for (const auto& rep : out.reports) {
            json per = json::object();
            for (const auto& row : rep.per_rate)
                if (row.n_inf > 0) per[row.rate] = row.n_inf;
            if (!per.empty()) notes[rep.method] = {{"inf_psnr_excluded", per}};
        }
        std::ofstream nf(out_dir + "/report_notes.json");
        nf << notes.dump(2) << "\n";
    }

    out.montage_png = out_dir + "/montage.png";
    save_png(build_montage(montage_col_labels, montage_row_labels, montage_cells),
             out.montage_png);

    RunManifest rm;
    rm.command = "eval";
    rm.effective_config = cfg;
    rm.seed = 0;
    rm.dataset_path = manifest_path;
    rm.dataset_sha256 = sha256_file_hex(manifest_path);
    for (const auto& m : methods)
        if (!m.ckpt.empty())
            rm.lineage.push_back({"model:" + m.label, m.ckpt, sha256_file_hex(m.ckpt)});
    write_run_manifest(rm, out_dir);
    return out;
}

}  // namespace ufv
