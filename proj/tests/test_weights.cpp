#include <doctest.h>

#include "anchors.hpp"
#include "rng.hpp"

#include <cmath>

using namespace ufv;

namespace {

// independent oracle: the class-score formula evaluated literally
std::vector<double> weights_oracle(double r, const std::vector<double>& a) {
    size_t k = a.size();
    std::vector<double> d(k), w(k);
    double sum = 0.0;
    for (size_t i = 0; i < k; ++i) {
        d[i] = std::fabs(r - a[i]);
        sum += d[i];
    }
    for (size_t i = 0; i < k; ++i) w[i] = (1.0 / double(k - 1)) * (1.0 - d[i] / sum);
    return w;
}

const std::vector<double> kAnchors = {1.0 / 8, 1.0 / 4, 1.0 / 2};

}  // namespace

TEST_CASE("anchor weights match hand evaluation on all mr8 rates") {
    for (int n = 1; n <= 8; ++n) {
        double r = n / 16.0;
        auto got = compute_anchor_weights(r, kAnchors);
        auto want = weights_oracle(r, kAnchors);
        REQUIRE(got.size() == 3);
        for (size_t i = 0; i < 3; ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-12);
    }
}

TEST_CASE("anchor weights frozen examples") {
    auto w1 = compute_anchor_weights(0.125, kAnchors);
    CHECK(w1[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w1[1] == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(w1[2] == doctest::Approx(0.125).epsilon(1e-12));

    auto w2 = compute_anchor_weights(0.25, kAnchors);
    CHECK(w2[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(w2[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w2[2] == doctest::Approx(1.0 / 6).epsilon(1e-12));
}

TEST_CASE("anchor weights simplex and proximity properties") {
    Rng rng(123);
    for (int trial = 0; trial < 10000; ++trial) {
        double r = rng.uniform(1e-6, 1.0);
        auto w = compute_anchor_weights(r, kAnchors);
        double sum = 0.0;
        for (double v : w) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-6);
        // closer anchors get strictly larger weight
        for (size_t i = 0; i < 3; ++i)
            for (size_t j = 0; j < 3; ++j)
                if (std::fabs(r - kAnchors[i]) < std::fabs(r - kAnchors[j]))
                    CHECK(w[i] > w[j]);
    }
}

TEST_CASE("anchor weights argmax at exact anchor rates") {
    for (size_t i = 0; i < kAnchors.size(); ++i) {
        auto w = compute_anchor_weights(kAnchors[i], kAnchors);
        size_t arg = 0;
        for (size_t j = 1; j < w.size(); ++j)
            if (w[j] > w[arg]) arg = j;
        CHECK(arg == i);
    }
}

TEST_CASE("anchor weights generalize to k anchors") {
    Rng rng(7);
    for (size_t k : {size_t(2), size_t(4), size_t(5)}) {
        std::vector<double> anchors;
        for (size_t i = 0; i < k; ++i) anchors.push_back((i + 1.0) / double(k + 1));
        for (int trial = 0; trial < 100; ++trial) {
            double r = rng.uniform(1e-3, 1.0);
            auto w = compute_anchor_weights(r, anchors);
            REQUIRE(w.size() == k);
            double sum = 0.0;
            for (double v : w) sum += v;
            CHECK(std::fabs(sum - 1.0) <= 1e-6);
        }
    }
    // single anchor: constant weight 1
    auto w1 = compute_anchor_weights(0.3, std::vector<double>{0.25});
    REQUIRE(w1.size() == 1);
    CHECK(w1[0] == 1.0);
}

TEST_CASE("anchor weights reject degenerate input") {
    CHECK_THROWS_AS(compute_anchor_weights(0.25, std::vector<double>{0.25, 0.25}),
                    InvalidArgument);
    CHECK_THROWS_AS(compute_anchor_weights(0.0, kAnchors), InvalidArgument);
    CHECK_THROWS_AS(compute_anchor_weights(1.5, kAnchors), InvalidArgument);
    CHECK_THROWS_AS(compute_anchor_weights(0.5, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("fractions parse and validate") {
    Fraction f = parse_fraction("3/16");
    CHECK(f.num == 3);
    CHECK(f.den == 16);
    CHECK(f.str() == "3/16");
    CHECK(parse_fraction("1").value() == 1.0);
    CHECK(parse_fraction("2/16").same_value(parse_fraction("1/8")));
    CHECK_THROWS_AS(parse_fraction("x/y"), InvalidArgument);
    CHECK_THROWS_AS(parse_fraction("-1/4"), InvalidArgument);

    AnchorConfig cfg;
    cfg.hr_size = 64;
    cfg.rate_set = rate_preset("mr8");
    cfg.validate();
    CHECK(cfg.lr_side(Fraction(1, 8)) == 8);
    CHECK(rate_preset("mr3").size() == 3);
    CHECK(rate_preset("mr7").size() == 7);
    CHECK_THROWS_AS(rate_preset("mr9"), InvalidArgument);

    AnchorConfig bad = cfg;
    bad.hr_size = 24;  // 24/16 not integral
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}
