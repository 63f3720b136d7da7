#include <doctest.h>

#include "losses.hpp"
#include "rng.hpp"

#include <cmath>

using namespace ufv;

TEST_CASE("l1 loss golden values") {
    Tensor a({1, 1, 2, 2});
    Tensor b({1, 1, 2, 2});
    a.fill(0.3f);
    b.fill(0.3f);
    CHECK(l1_loss(a, b) == 0.0);

    for (int64_t i = 0; i < b.numel(); ++i) b[i] = a[i] + 0.1f;
    CHECK(l1_loss(a, b) == doctest::Approx(0.1).epsilon(1e-6));

    // [[0,1],[1,0]] vs [[1,1],[0,0]] -> mean |.| = 0.5
    float av[4] = {0, 1, 1, 0};
    float bv[4] = {1, 1, 0, 0};
    for (int i = 0; i < 4; ++i) {
        a[i] = av[i];
        b[i] = bv[i];
    }
    CHECK(l1_loss(a, b) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l1 grad is the scaled sign") {
    Tensor a({1, 1, 1, 3});
    Tensor b({1, 1, 1, 3});
    a[0] = 1.0f; a[1] = 0.0f; a[2] = 0.5f;
    b[0] = 0.0f; b[1] = 1.0f; b[2] = 0.5f;
    Tensor g = l1_loss_grad(a, b);
    CHECK(g[0] == doctest::Approx(1.0 / 3));
    CHECK(g[1] == doctest::Approx(-1.0 / 3));
    CHECK(g[2] == 0.0f);
    Tensor c({1, 1, 1, 2});
    CHECK_THROWS_AS(l1_loss(a, c), InvalidArgument);
}

TEST_CASE("soft cross-entropy golden values") {
    Tensor p({1, 3});
    Tensor t({1, 3});
    p.at(0, 0) = 1.0f; p.at(0, 1) = 0.0f; p.at(0, 2) = 0.0f;
    t.at(0, 0) = 1.0f; t.at(0, 1) = 0.0f; t.at(0, 2) = 0.0f;
    CHECK(soft_cross_entropy(p, t) == doctest::Approx(0.0).epsilon(1e-9));

    // uniform prediction vs any valid target -> ln 3
    p.at(0, 0) = p.at(0, 1) = p.at(0, 2) = 1.0f / 3;
    t.at(0, 0) = 0.5f; t.at(0, 1) = 0.375f; t.at(0, 2) = 0.125f;
    CHECK(soft_cross_entropy(p, t) == doctest::Approx(std::log(3.0)).epsilon(1e-6));

    // self cross-entropy equals entropy (brute-force -sum g ln g)
    p = t;
    double want = 0.0;
    for (int i = 0; i < 3; ++i) want -= double(t.at(0, i)) * std::log(double(t.at(0, i)));
    CHECK(soft_cross_entropy(p, t) == doctest::Approx(want).epsilon(1e-6));
    CHECK(want == doctest::Approx(0.9743).epsilon(1e-3));
}

TEST_CASE("soft cross-entropy lower bound over random simplex points") {
    Rng rng(55);
    auto simplex3 = [&] {
        double a = rng.next_double(), b = rng.next_double(), c = rng.next_double() + 1e-9;
        double s = a + b + c;
        return std::array<double, 3>{a / s, b / s, c / s};
    };
    for (int trial = 0; trial < 500; ++trial) {
        auto pv = simplex3();
        auto tv = simplex3();
        Tensor p({1, 3});
        Tensor t({1, 3});
        for (int i = 0; i < 3; ++i) {
            p.at(0, i) = float(pv[size_t(i)]);
            t.at(0, i) = float(tv[size_t(i)]);
        }
        double ce = soft_cross_entropy(p, t);
        double h = entropy_of({tv[0], tv[1], tv[2]});
        CHECK(ce >= h - 1e-6);
    }
}

TEST_CASE("soft cross-entropy rejects unnormalized rows") {
    Tensor p({1, 3});
    Tensor t({1, 3});
    p.at(0, 0) = 0.5f; p.at(0, 1) = 0.5f; p.at(0, 2) = 0.5f;
    t.at(0, 0) = 1.0f;
    CHECK_THROWS_AS(soft_cross_entropy(p, t), InvalidArgument);
}

TEST_CASE("total loss composition") {
    CHECK(total_loss(0.2, 1.0, 0.1) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(total_loss(0.7, 123.0, 0.0) == 0.7);
    CHECK(total_loss(0.0, 0.0, 0.5) == 0.0);
    CHECK_THROWS_AS(total_loss(std::nan(""), 0.0, 0.1), RuntimeFailure);
}
