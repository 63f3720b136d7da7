#include <doctest.h>

#include "adam.hpp"
#include "config.hpp"
#include "synth.hpp"
#include "test_util.hpp"
#include "train.hpp"

#include <filesystem>
#include <sstream>

using namespace ufv;
using json = nlohmann::json;

namespace {

// tiny-but-real training fixture: 6 images at hr 16, anchor rates only
struct Fixture {
    testutil::TempDir tmp;
    std::string manifest;

    explicit Fixture(const std::string& name, int n_images = 6, int hr = 32)
        : tmp("train_" + name) {
        make_corpus(tmp / "corpus", n_images, hr, 99);
        AnchorConfig cfg;
        cfg.hr_size = hr;
        cfg.rate_set = {{1, 8}, {1, 4}, {1, 2}};
        BuildResult br = build_dataset(tmp / "corpus", cfg, "train", 0.9, tmp / "ds");
        manifest = br.manifest_path;
    }
};

json micro_cfg(int steps, uint64_t seed = 41) {
    json cfg = default_config();
    cfg["model"]["base_ch"] = 2;
    cfg["model"]["regressor_conv"] = {4, 4, 4, 4, 4};
    cfg["model"]["regressor_fc"] = {16, 8};
    cfg["train"]["batch_size"] = 4;
    cfg["train"]["max_steps"] = steps;
    cfg["train"]["seed"] = seed;
    cfg["train"]["log_every"] = 1;
    cfg["train"]["ckpt_every"] = 100000;
    return cfg;
}

struct CurveRow {
    int64_t step;
    double sr, wt, total;
};

std::vector<CurveRow> parse_curve(const std::string& path) {
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    std::vector<CurveRow> rows;
    while (std::getline(f, line)) {
        CurveRow r;
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        r.step = std::stoll(tok);
        std::getline(ss, tok, ',');
        r.sr = std::stod(tok);
        std::getline(ss, tok, ',');
        r.wt = std::stod(tok);
        std::getline(ss, tok, ',');
        r.total = std::stod(tok);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("adam takes deterministic steps and validates list stability") {
    Rng rng(1);
    Linear<float> fc;
    fc.init(3, 2, rng, 1.0);
    ParamList<float> params;
    fc.collect(params, "fc");
    for (auto& p : params) p.grad->fill(0.5f);
    Adam<float> opt(1e-2);
    Tensor before = fc.w;
    opt.step(params);
    CHECK(fc.w[0] != before[0]);
    ParamList<float> shorter(params.begin(), params.begin() + 1);
    CHECK_THROWS_AS(opt.step(shorter), RuntimeFailure);
}

TEST_CASE("anchor training writes a curve, a checkpoint and lineage metadata") {
    Fixture fx("anchor");
    json cfg = micro_cfg(12);
    StageResult r = train_anchor(fx.manifest, 0, cfg, fx.tmp / "run");
    CHECK(std::filesystem::exists(r.checkpoint_path));
    CHECK(std::filesystem::exists(r.loss_csv_path));
    CHECK(std::filesystem::exists(fx.tmp / "run/run.json"));

    LoadedCheckpoint ck = load_checkpoint(r.checkpoint_path);
    CHECK(ck.meta.kind == "srg");
    CHECK(ck.meta.stage.stage == "anchor-0");
    CHECK(ck.meta.stage.step == 12);

    auto rows = parse_curve(r.loss_csv_path);
    REQUIRE(rows.size() == 12);
    for (const auto& row : rows) {
        CHECK(row.wt == 0.0);
        CHECK(row.total == row.sr + 0.1 * row.wt);  // exact decomposition identity
    }
}

TEST_CASE("anchor training rejects bad indices and absent rates") {
    Fixture fx("anchor_bad");
    json cfg = micro_cfg(1);
    CHECK_THROWS_AS(train_anchor(fx.manifest, 5, cfg, fx.tmp / "r1"), InvalidArgument);

    // a manifest whose rate set misses anchor 0 entirely
    AnchorConfig cfg2;
    cfg2.hr_size = 16;
    cfg2.rate_set = {{1, 2}};
    BuildResult br = build_dataset(fx.tmp / "corpus", cfg2, "train", 0.9, fx.tmp / "ds-half");
    CHECK_THROWS_AS(train_anchor(br.manifest_path, 0, cfg, fx.tmp / "r2"), RuntimeFailure);
}

TEST_CASE("seeded training runs are bit-identical") {
    Fixture fx("determinism");
    json cfg = micro_cfg(8, 1234);
    StageResult a = train_anchor(fx.manifest, 1, cfg, fx.tmp / "run_a");
    StageResult b = train_anchor(fx.manifest, 1, cfg, fx.tmp / "run_b");
    CHECK(testutil::read_file(a.checkpoint_path) == testutil::read_file(b.checkpoint_path));
    CHECK(testutil::read_file(a.loss_csv_path) == testutil::read_file(b.loss_csv_path));

    json cfg2 = micro_cfg(8, 4321);
    StageResult c = train_anchor(fx.manifest, 1, cfg2, fx.tmp / "run_c");
    CHECK(testutil::read_file(a.checkpoint_path) != testutil::read_file(c.checkpoint_path));
}

TEST_CASE("zero-step training emits the untouched initialization") {
    Fixture fx("zerostep");
    json cfg = micro_cfg(0);
    StageResult a = train_anchor(fx.manifest, 0, cfg, fx.tmp / "zero_a");
    StageResult b = train_anchor(fx.manifest, 0, cfg, fx.tmp / "zero_b");
    CHECK(testutil::read_file(a.checkpoint_path) == testutil::read_file(b.checkpoint_path));
    LoadedCheckpoint ck = load_checkpoint(a.checkpoint_path);
    CHECK(ck.meta.stage.step == 0);

    json cfg5 = micro_cfg(5);
    StageResult c = train_anchor(fx.manifest, 0, cfg5, fx.tmp / "five");
    CHECK(testutil::read_file(a.checkpoint_path) != testutil::read_file(c.checkpoint_path));
}

TEST_CASE("regressor training reports per-rate accuracy") {
    Fixture fx("regressor");
    json cfg = micro_cfg(10);
    StageResult r = train_regressor(fx.manifest, cfg, fx.tmp / "run");
    LoadedCheckpoint ck = load_checkpoint(r.checkpoint_path);
    CHECK(ck.meta.kind == "regressor");
    CHECK(std::filesystem::exists(fx.tmp / "run/accuracy.csv"));
    REQUIRE(r.extra.contains("per_rate_accuracy"));
    CHECK(r.extra["per_rate_accuracy"].size() == 3);

    auto rows = parse_curve(r.loss_csv_path);
    for (const auto& row : rows) {
        CHECK(row.sr == 0.0);
        CHECK(row.total == row.sr + 0.1 * row.wt);
    }
    // untrained soft classifier starts near the uniform-prediction level ln 3
    CHECK(rows.front().wt == doctest::Approx(std::log(3.0)).epsilon(0.2));
}

TEST_CASE("integrated training enforces the stage-ordering contract") {
    Fixture fx("ordering");
    json cfg = micro_cfg(2);
    CHECK_THROWS_WITH_AS(
        train_integrated({}, "", fx.manifest, cfg, fx.tmp / "run"),
        doctest::Contains("anchor checkpoints"), RuntimeFailure);

    // from-scratch flag lifts the requirement
    json scratch = micro_cfg(2);
    scratch["train"]["from_scratch"] = true;
    StageResult r = train_integrated({}, "", fx.manifest, scratch, fx.tmp / "run_scratch");
    CHECK(std::filesystem::exists(r.checkpoint_path));
    LoadedCheckpoint ck = load_checkpoint(r.checkpoint_path);
    CHECK(ck.meta.kind == "ufvnet");
}

TEST_CASE("integrated training assembles stage-1 checkpoints and trains") {
    Fixture fx("integrated");
    json cfg = micro_cfg(6);

    std::vector<std::string> anchors;
    for (int i = 0; i < 3; ++i) {
        StageResult r = train_anchor(fx.manifest, i, cfg, fx.tmp / ("a" + std::to_string(i)));
        anchors.push_back(r.checkpoint_path);
    }
    StageResult reg = train_regressor(fx.manifest, cfg, fx.tmp / "reg");

    StageResult r = train_integrated(anchors, reg.checkpoint_path, fx.manifest, cfg,
                                     fx.tmp / "int");
    LoadedCheckpoint ck = load_checkpoint(r.checkpoint_path);
    CHECK(ck.meta.kind == "ufvnet");
    CHECK(ck.meta.lineage.size() == 4);

    // discard contract: no branch tail parameters in the integrated archive
    for (const auto& [name, t] : ck.params) {
        CHECK(name.find(".tail.") == std::string::npos);
        CHECK(name.find("latent") == std::string::npos);
    }

    // the losses decompose exactly at every logged step
    auto rows = parse_curve(r.loss_csv_path);
    for (const auto& row : rows) CHECK(row.total == row.sr + 0.1 * row.wt);

    // wrong-order anchors are refused before any step
    std::vector<std::string> swapped = {anchors[1], anchors[0], anchors[2]};
    CHECK_THROWS_WITH_AS(
        train_integrated(swapped, reg.checkpoint_path, fx.manifest, cfg, fx.tmp / "int_bad"),
        doctest::Contains("anchor-0"), RuntimeFailure);
}

TEST_CASE("integrated nw variant trains without a regressor") {
    Fixture fx("nw");
    json cfg = micro_cfg(3);
    cfg["model"]["variant"] = "nw";
    std::vector<std::string> anchors;
    for (int i = 0; i < 3; ++i) {
        StageResult r = train_anchor(fx.manifest, i, cfg, fx.tmp / ("a" + std::to_string(i)));
        anchors.push_back(r.checkpoint_path);
    }
    StageResult r = train_integrated(anchors, "", fx.manifest, cfg, fx.tmp / "int_nw");
    LoadedCheckpoint ck = load_checkpoint(r.checkpoint_path);
    UfvSpec spec = ufv_spec_from_json(ck.meta.spec);
    CHECK(spec.variant == Variant::nw);
    for (const auto& [name, t] : ck.params) CHECK(name.rfind("regressor", 0) != 0);
    auto rows = parse_curve(r.loss_csv_path);
    for (const auto& row : rows) CHECK(row.wt == 0.0);
}

TEST_CASE("integrated training refuses checkpoints from a different spec") {
    Fixture fx("specclash");
    json cfg = micro_cfg(2);
    std::vector<std::string> anchors;
    for (int i = 0; i < 3; ++i) {
        StageResult r = train_anchor(fx.manifest, i, cfg, fx.tmp / ("a" + std::to_string(i)));
        anchors.push_back(r.checkpoint_path);
    }
    StageResult reg = train_regressor(fx.manifest, cfg, fx.tmp / "reg");

    json wider = micro_cfg(2);
    wider["model"]["base_ch"] = 3;
    CHECK_THROWS_WITH_AS(
        train_integrated(anchors, reg.checkpoint_path, fx.manifest, wider, fx.tmp / "int"),
        doctest::Contains("base_ch"), RuntimeFailure);
}

TEST_CASE("train config validation") {
    json cfg = micro_cfg(1);
    cfg["train"]["batch_size"] = 0;
    CHECK_THROWS_AS(TrainConfig::from_json(cfg), InvalidArgument);
    cfg = micro_cfg(1);
    cfg["train"]["decoder_init"] = "sideways";
    CHECK_THROWS_AS(TrainConfig::from_json(cfg), InvalidArgument);
}
