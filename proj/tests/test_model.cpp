#include <doctest.h>

#include "model.hpp"

#include <cmath>

using namespace ufv;

namespace {

Tensor random_input(std::vector<int> shape, uint64_t seed) {
    Rng rng(seed);
    Tensor x(std::move(shape));
    for (int64_t i = 0; i < x.numel(); ++i) x[i] = float(rng.next_double());
    return x;
}

UfvSpec small_spec(Variant v = Variant::full) {
    UfvSpec s;
    s.hr_size = 32;
    s.base_ch = 2;
    s.global_skip = true;
    s.variant = v;
    s.anchors = {{1, 8}, {1, 4}, {1, 2}};
    s.regressor.conv_ch = {4, 4, 4, 4, 4};
    s.regressor.fc_dim = {16, 8};
    return s;
}

}  // namespace

TEST_CASE("srg preserves spatial size") {
    Rng rng(1);
    Srg<float> srg;
    srg.init({16, 2, true}, rng);
    Tensor x = random_input({2, 3, 16, 16}, 3);
    Tensor y = srg.forward(x);
    CHECK(y.shape() == x.shape());
    CHECK_THROWS_AS(srg.forward(random_input({1, 3, 8, 8}, 4)), InvalidArgument);
}

TEST_CASE("srg with global skip and zeroed output conv starts at the input") {
    Rng rng(2);
    Srg<float> srg;
    srg.init({16, 2, true}, rng);
    Tensor x = random_input({1, 3, 16, 16}, 5);
    Tensor y = srg.forward(x);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("srg size algebra holds for divisible-by-8 inputs") {
    for (int hr : {16, 24, 32}) {
        Rng rng(3);
        Srg<float> srg;
        srg.init({hr, 2, false}, rng);
        Tensor x = random_input({1, 3, hr, hr}, 6);
        CHECK(srg.forward(x).shape() == x.shape());
    }
    SrgSpec bad{20, 2, true};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("regressor first-pool geometry tracks the input size") {
    RegressorSpec s128;
    s128.input_size = 128;
    auto [k128, s128s] = s128.pool1_geometry();
    // 31 -> 27, the canonical stage-1 map scaled to a 128 input
    CHECK(k128 == 5);
    CHECK(s128s == 1);
    int o1 = (128 + 4 - 11) / 4 + 1;
    CHECK((o1 - k128) / s128s + 1 == 27);

    RegressorSpec s64;
    s64.input_size = 64;
    auto [k64, s64s] = s64.pool1_geometry();
    int o64 = (64 + 4 - 11) / 4 + 1;
    CHECK((o64 - k64) / s64s + 1 == 14);  // round(27 * 64/128)
}

TEST_CASE("regressor outputs a probability row per sample") {
    Rng rng(4);
    RegressorSpec spec;
    spec.input_size = 64;
    spec.k = 3;
    spec.conv_ch = {4, 6, 8, 8, 6};
    spec.fc_dim = {32, 16};
    Regressor<float> reg;
    reg.init(spec, rng);
    Tensor x = random_input({3, 3, 64, 64}, 7);
    Tensor p = reg.forward(x);
    CHECK(p.shape() == std::vector<int>{3, 3});
    for (int n = 0; n < 3; ++n) {
        double sum = 0;
        for (int k = 0; k < 3; ++k) {
            CHECK(p.at(n, k) >= 0.0f);
            sum += p.at(n, k);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
    // eval-mode determinism: identical inputs, identical outputs
    Tensor p2 = reg.forward(x);
    for (int64_t i = 0; i < p.numel(); ++i) CHECK(p[i] == p2[i]);
}

TEST_CASE("ufvnet forward produces SR and weights") {
    Rng rng(5);
    UfvNet<float> net;
    net.init(small_spec(), rng);
    Tensor x = random_input({2, 3, 32, 32}, 8);
    auto res = net.forward(x);
    CHECK(res.sr.shape() == x.shape());
    CHECK(res.weights.shape() == std::vector<int>{2, 3});
    for (int n = 0; n < 2; ++n) {
        double sum = 0;
        for (int k = 0; k < 3; ++k) sum += res.weights.at(n, k);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("nw variant fixes all weights to one, fm needs rates") {
    Rng rng(6);
    UfvNet<float> nw;
    nw.init(small_spec(Variant::nw), rng);
    Tensor x = random_input({2, 3, 32, 32}, 9);
    auto res = nw.forward(x);
    for (int64_t i = 0; i < res.weights.numel(); ++i) CHECK(res.weights[i] == 1.0f);

    UfvNet<float> fm;
    Rng rng2(7);
    fm.init(small_spec(Variant::fm), rng2);
    CHECK_THROWS_AS(fm.forward(x), InvalidArgument);
    auto res_fm = fm.forward(x, {0.25, 0.25});
    CHECK(res_fm.weights.at(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-6));
    CHECK(res_fm.weights.at(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res_fm.weights.at(0, 2) == doctest::Approx(1.0 / 6).epsilon(1e-6));
}

TEST_CASE("one-hot weights silence the other branches bit-exactly") {
    Rng rng(8);
    UfvNet<float> a;
    a.init(small_spec(Variant::nw), rng);

    // same retained graph, but branches 2 and 3 re-randomized: with weights
    // (1,0,0) their scaled features are exactly zero either way
    UfvNet<float> b;
    Rng rng_b(999);
    b.init(small_spec(Variant::nw), rng_b);
    {
        ParamList<float> src = a.params();
        ParamList<float> dst = b.params();
        copy_params(src, dst);
        Rng scramble(31337);
        for (size_t i = 1; i < 3; ++i) {
            ParamList<float> enc;
            b.branches[i].collect(enc, "enc");
            for (auto& p : enc)
                for (int64_t j = 0; j < p.value->numel(); ++j)
                    (*p.value)[j] = float(scramble.uniform(-1, 1));
        }
    }

    Tensor w({1, 3});
    w.at(0, 0) = 1.0f;
    w.at(0, 1) = 0.0f;
    w.at(0, 2) = 0.0f;
    a.weight_override = w;
    b.weight_override = w;

    Tensor x = random_input({1, 3, 32, 32}, 10);
    Tensor ya = a.forward(x).sr;
    Tensor yb = b.forward(x).sr;
    for (int64_t i = 0; i < ya.numel(); ++i) CHECK(ya[i] == yb[i]);
}

TEST_CASE("concatenated features are linear in the branch weights") {
    Rng rng(9);
    UfvNet<float> net;
    net.init(small_spec(Variant::nw), rng);
    Tensor x = random_input({1, 3, 32, 32}, 11);

    Tensor w1({1, 3});
    w1.at(0, 0) = 0.3f; w1.at(0, 1) = 0.5f; w1.at(0, 2) = 0.2f;
    Tensor w2 = w1;
    w2.at(0, 1) = 1.0f;  // double branch 2

    // capture the scaled encoder outputs through the fusion input by reading
    // the branch encodings directly
    Tensor e = net.branches[1].forward(x);
    net.weight_override = w1;
    net.forward(x);
    // the relation scaled = w * enc is bitwise: check on raw products
    for (int64_t i = 0; i < std::min<int64_t>(e.numel(), 64); ++i) {
        float a = e[i] * w1.at(0, 1);
        float b = e[i] * w2.at(0, 1);
        CHECK(b == 2.0f * a);
    }
}

TEST_CASE("test graph equals the training graph on the SR path") {
    Rng rng(10);
    UfvNet<float> with_tails;
    with_tails.init(small_spec(), rng, /*attach_tails=*/true);
    for (uint64_t t = 0; t < 3; ++t) {
        Tensor x = random_input({1, 3, 32, 32}, 20 + t);
        auto train_mode = with_tails.forward(x, {}, /*compute_branch_sr=*/true);
        auto test_mode = with_tails.forward(x, {}, /*compute_branch_sr=*/false);
        REQUIRE(train_mode.branch_sr.size() == 3);
        CHECK(test_mode.branch_sr.empty());
        for (int64_t i = 0; i < train_mode.sr.numel(); ++i)
            CHECK(train_mode.sr[i] == test_mode.sr[i]);
    }
}

TEST_CASE("variant tags cover the branch-count ablations") {
    CHECK(ufv_tag_for_k(Variant::full, 3) == "full");
    CHECK(ufv_tag_for_k(Variant::full, 1) == "one_srg");
    CHECK(ufv_tag_for_k(Variant::full, 2) == "two_srg");
    CHECK(ufv_tag_for_k(Variant::full, 4) == "four_srg");
    CHECK(ufv_tag_for_k(Variant::nw, 3) == "nw");
    CHECK(ufv_tag_for_k(Variant::fm, 3) == "fm");
    CHECK(parse_variant("nw") == Variant::nw);
    CHECK_THROWS_AS(parse_variant("bogus"), InvalidArgument);
}

TEST_CASE("single-branch network runs without a regressor") {
    UfvSpec s = small_spec();
    s.anchors = {{1, 4}};
    CHECK(!s.has_regressor());
    Rng rng(11);
    UfvNet<float> net;
    net.init(s, rng);
    Tensor x = random_input({1, 3, 32, 32}, 30);
    auto res = net.forward(x);
    CHECK(res.weights.numel() == 1);
    CHECK(res.weights[0] == 1.0f);
}

TEST_CASE("parameter counts are deterministic for a fixed seed") {
    Rng rng_a(42), rng_b(42);
    UfvNet<float> a, b;
    a.init(small_spec(), rng_a);
    b.init(small_spec(), rng_b);
    ParamList<float> pa = a.params(), pb = b.params();
    REQUIRE(pa.size() == pb.size());
    CHECK(count_params(pa) == count_params(pb));
    for (size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].name == pb[i].name);
        for (int64_t j = 0; j < pa[i].value->numel(); ++j)
            CHECK((*pa[i].value)[j] == (*pb[i].value)[j]);
    }
}
