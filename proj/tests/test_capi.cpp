#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ufvnet.h>

#include <json.hpp>

#include "test_util.hpp"

#include <filesystem>
#include <string>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
    REQUIRE(s != nullptr);
    std::string out(s);
    ufv_string_free(s);
    return out;
}

json call(ufv_status (*fn)(const char*, char**), const json& opts) {
    char* result = nullptr;
    ufv_status st = fn(opts.dump().c_str(), &result);
    INFO("last error: ", ufv_last_error());
    REQUIRE(st == UFV_OK);
    return json::parse(take(result));
}

}  // namespace

TEST_CASE("version and config surface") {
    CHECK(std::string(ufv_version()).find('.') != std::string::npos);

    char* cfg = nullptr;
    REQUIRE(ufv_config_default(&cfg) == UFV_OK);
    json parsed = json::parse(take(cfg));
    CHECK(parsed["train"]["lr"] == 2e-4);
    CHECK(parsed["train"]["batch_size"] == 32);
    CHECK(parsed["dataset"]["hr_size"] == 128);

    char* help = nullptr;
    REQUIRE(ufv_config_help(&help) == UFV_OK);
    CHECK(take(help).find("train.alpha") != std::string::npos);
}

TEST_CASE("malformed options produce invalid-argument with a message") {
    char* result = nullptr;
    CHECK(ufv_make_corpus("{not json", &result) == UFV_INVALID_ARGUMENT);
    CHECK(std::string(ufv_last_error()).find("JSON") != std::string::npos);
    CHECK(ufv_make_corpus(nullptr, &result) == UFV_INVALID_ARGUMENT);
}

TEST_CASE("full pipeline through the C surface") {
    testutil::TempDir tmp("capi_pipeline");
    json cfg = {{"corpus", {{"count", 6}, {"size", 16}, {"seed", 3}}},
                {"dataset", {{"hr_size", 16}, {"preset", "mr3"}}},
                {"model",
                 {{"base_ch", 2},
                  {"regressor_conv", {4, 4, 4, 4, 4}},
                  {"regressor_fc", {16, 8}}}},
                {"train", {{"batch_size", 2}, {"max_steps", 2}, {"log_every", 1}}}};

    json corpus = call(ufv_make_corpus, {{"out_dir", tmp / "corpus"}, {"config", cfg}});
    CHECK(corpus["count"] == 6);

    json ds = call(ufv_build_dataset, {{"corpus", tmp / "corpus"},
                                       {"out_dir", tmp / "ds"},
                                       {"split", "train"},
                                       {"config", cfg}});
    CHECK(ds["n_records"] == 15);  // 5 train images x 3 rates

    json a0 = call(ufv_train, {{"stage", "anchor"},
                               {"anchor_index", 0},
                               {"manifest", tmp / "ds/manifest.jsonl"},
                               {"out_dir", tmp / "a0"},
                               {"config", cfg}});
    std::string ckpt = a0["checkpoint"];
    CHECK(fs::exists(ckpt));

    json ev = call(ufv_evaluate, {{"manifest", tmp / "ds/manifest.jsonl"},
                                  {"out_dir", tmp / "eval"},
                                  {"methods", json::array({{{"label", "bicubic"}}})},
                                  {"config", cfg}});
    CHECK(fs::exists(std::string(ev["report"])));
    CHECK(fs::exists(std::string(ev["montage"])));

    // merge the report with itself through ufv_report
    json merged = call(ufv_report, {{"inputs", {std::string(ev["report"])}},
                                    {"out", tmp / "merged.csv"}});
    CHECK(fs::exists(tmp / "merged.csv"));

    // model handle: open, info, infer
    ufv_model* model = nullptr;
    REQUIRE(ufv_model_open(ckpt.c_str(), &model) == UFV_OK);
    char* info_raw = nullptr;
    REQUIRE(ufv_model_info(model, &info_raw) == UFV_OK);
    json info = json::parse(take(info_raw));
    CHECK(info["kind"] == "srg");
    CHECK(info["hr_size"] == 16);
    CHECK(info["param_count"].get<int64_t>() > 0);

    std::string lr_img;
    for (const auto& e : fs::directory_iterator(tmp / "ds/lr/4x4")) {
        lr_img = e.path().string();
        break;
    }
    REQUIRE(!lr_img.empty());
    char* weights_raw = nullptr;
    REQUIRE(ufv_model_infer_file(model, lr_img.c_str(), (tmp / "sr.png").c_str(),
                                 &weights_raw) == UFV_OK);
    json weights = json::parse(take(weights_raw));
    CHECK(weights["rate"] == 0.25);
    CHECK(fs::exists(tmp / "sr.png"));
    ufv_model_close(model);

    // opening garbage fails cleanly
    ufv_model* bad = nullptr;
    CHECK(ufv_model_open((tmp / "nope.ufvckpt").c_str(), &bad) == UFV_ERROR);

    // lint the whole tree
    char* lint_raw = nullptr;
    CHECK(ufv_lint(tmp.path().c_str(), &lint_raw) == UFV_OK);
    json lint = json::parse(take(lint_raw));
    CHECK(lint["clean"] == true);
}

TEST_CASE("out-dir collisions are refused without force") {
    testutil::TempDir tmp("capi_force");
    json cfg = {{"corpus", {{"count", 1}, {"size", 16}, {"seed", 1}}}};
    call(ufv_make_corpus, {{"out_dir", tmp / "c"}, {"config", cfg}});
    char* result = nullptr;
    json opts = {{"out_dir", tmp / "c"}, {"config", cfg}};
    CHECK(ufv_make_corpus(opts.dump().c_str(), &result) == UFV_INVALID_ARGUMENT);
    opts["force"] = true;
    CHECK(ufv_make_corpus(opts.dump().c_str(), &result) == UFV_OK);
    ufv_string_free(result);
}
