#include <doctest.h>

#include "evaluate.hpp"
#include "synth.hpp"
#include "test_util.hpp"
#include "train.hpp"
#include "config.hpp"

#include <filesystem>

using namespace ufv;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json eval_cfg() {
    json cfg = default_config();
    cfg["model"]["base_ch"] = 2;
    cfg["eval"]["batch_size"] = 4;
    return cfg;
}

}  // namespace

TEST_CASE("bicubic evaluation writes reports, samples and a montage") {
    testutil::TempDir tmp("eval_bicubic");
    make_corpus(tmp / "corpus", 6, 32, 3);
    AnchorConfig cfg;
    cfg.hr_size = 32;
    cfg.rate_set = rate_preset("mr3");
    BuildResult br = build_dataset(tmp / "corpus", cfg, "train", 0.9, tmp / "ds");

    EvalOutput eo = run_evaluation({{"bicubic", ""}}, br.manifest_path, eval_cfg(),
                                   tmp / "eval", "tiny");
    REQUIRE(eo.reports.size() == 1);
    const EvalReport& rep = eo.reports[0];
    CHECK(rep.method == "bicubic");
    CHECK(rep.dataset == "tiny");
    CHECK(rep.per_rate.size() == 3);
    rep.check_consistency();
    for (const auto& row : rep.per_rate) {
        CHECK(row.n == 5);
        CHECK(std::isfinite(row.psnr_db));
        CHECK(row.ssim > 0.3);
        CHECK(row.ssim <= 1.0);
    }
    // coarser rates reconstruct worse under plain upscaling
    CHECK(rep.per_rate.front().psnr_db < rep.per_rate.back().psnr_db);

    CHECK(fs::exists(eo.report_csv));
    CHECK(fs::exists(eo.samples_csv));
    CHECK(fs::exists(eo.montage_png));
    CHECK(fs::exists(tmp / "eval/run.json"));

    Image montage = load_image(eo.montage_png);
    CHECK(montage.h > 32);
    CHECK(montage.w > 2 * 32);  // HR column + method column + labels
}

TEST_CASE("rate-1 manifest gives inf psnr and ssim 1 for the bicubic baseline") {
    testutil::TempDir tmp("eval_rate1");
    make_corpus(tmp / "corpus", 4, 32, 5);
    AnchorConfig cfg;
    cfg.hr_size = 32;
    cfg.rate_set = {{1, 1}};
    BuildResult br = build_dataset(tmp / "corpus", cfg, "train", 0.8, tmp / "ds");

    EvalOutput eo = run_evaluation({{"bicubic", ""}}, br.manifest_path, eval_cfg(),
                                   tmp / "eval", "identity");
    const EvalReport& rep = eo.reports[0];
    REQUIRE(rep.per_rate.size() == 1);
    CHECK(std::isinf(rep.per_rate[0].psnr_db));
    CHECK(rep.per_rate[0].n_inf == rep.per_rate[0].n);
    CHECK(rep.per_rate[0].ssim == 1.0);
    rep.check_consistency();
    CHECK(fs::exists(tmp / "eval/report_notes.json"));
}

TEST_CASE("checkpointed model evaluates and compares against bicubic in one pass") {
    testutil::TempDir tmp("eval_model");
    make_corpus(tmp / "corpus", 6, 32, 7);
    AnchorConfig acfg;
    acfg.hr_size = 32;
    acfg.rate_set = rate_preset("mr3");
    BuildResult br = build_dataset(tmp / "corpus", acfg, "train", 0.9, tmp / "ds");

    json cfg = eval_cfg();
    cfg["train"]["batch_size"] = 4;
    cfg["train"]["max_steps"] = 3;
    cfg["train"]["log_every"] = 1;
    StageResult sr = train_anchor(br.manifest_path, 0, cfg, tmp / "run");

    EvalOutput eo = run_evaluation({{"bicubic", ""}, {"model", sr.checkpoint_path}},
                                   br.manifest_path, cfg, tmp / "eval", "tiny");
    REQUIRE(eo.reports.size() == 2);
    for (const auto& rep : eo.reports) rep.check_consistency();

    // deterministic re-evaluation: identical reports
    EvalOutput eo2 = run_evaluation({{"bicubic", ""}, {"model", sr.checkpoint_path}},
                                    br.manifest_path, cfg, tmp / "eval2", "tiny");
    for (size_t r = 0; r < eo.reports.size(); ++r) {
        CHECK(eo.reports[r].aggregate.psnr_db == eo2.reports[r].aggregate.psnr_db);
        CHECK(eo.reports[r].aggregate.ssim == eo2.reports[r].aggregate.ssim);
    }
    CHECK(testutil::read_file(eo.report_csv) == testutil::read_file(eo2.report_csv));
}

TEST_CASE("model runner validates checkpoint kind and exposes metadata") {
    testutil::TempDir tmp("eval_runner");
    make_corpus(tmp / "corpus", 4, 32, 9);
    AnchorConfig acfg;
    acfg.hr_size = 32;
    acfg.rate_set = rate_preset("mr3");
    BuildResult br = build_dataset(tmp / "corpus", acfg, "train", 0.8, tmp / "ds");
    json cfg = eval_cfg();
    cfg["train"]["batch_size"] = 2;
    cfg["train"]["max_steps"] = 1;
    StageResult sr = train_anchor(br.manifest_path, 0, cfg, tmp / "run");

    ModelRunner runner(sr.checkpoint_path);
    CHECK(runner.kind() == "srg");
    CHECK(runner.hr_size() == 32);
    CHECK(runner.param_count() > 0);

    Tensor x({1, 3, 32, 32});
    auto [out, w] = runner.run(x);
    CHECK(out.shape() == x.shape());
    CHECK(w.empty());

    CHECK_THROWS_AS(ModelRunner(tmp / "nope.ufvckpt"), RuntimeFailure);
}
