#include <doctest.h>

#include "metrics.hpp"

#include <filesystem>
#include "rng.hpp"

#include <cmath>

using namespace ufv;

namespace {

Image random_image(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Image img(h, w, 3);
    for (float& v : img.px) v = float(rng.next_double());
    return img;
}

Image constant_image(int h, int w, float v) {
    Image img(h, w, 3);
    for (float& p : img.px) p = v;
    return img;
}

}  // namespace

TEST_CASE("psnr golden values") {
    Image a = random_image(16, 16, 1);
    CHECK(std::isinf(psnr(a, a)));

    Image zeros = constant_image(8, 8, 0.0f);
    Image ones = constant_image(8, 8, 1.0f);
    CHECK(psnr(zeros, ones) == doctest::Approx(0.0).epsilon(1e-12));

    // MSE = 0.01 -> 20 dB (formula-level golden; the image path quantizes to
    // float so it gets a float-level tolerance)
    CHECK(std::fabs(psnr_from_mse(0.01) - 20.0) < 1e-9);
    Image b = constant_image(8, 8, 0.4f);
    Image c = constant_image(8, 8, 0.5f);
    CHECK(std::fabs(psnr(b, c) - 20.0) < 1e-5);

    CHECK_THROWS_AS(psnr(a, zeros), InvalidArgument);
}

TEST_CASE("psnr symmetry and shift invariance") {
    Image a = random_image(12, 12, 2);
    Image b = random_image(12, 12, 3);
    CHECK(psnr(a, b) == psnr(b, a));
    // simultaneous in-range shift leaves the MSE unchanged
    Image a2 = a, b2 = b;
    for (float& v : a2.px) v = v * 0.5f + 0.1f;
    for (float& v : b2.px) v = v * 0.5f + 0.1f;
    Image a3 = a2, b3 = b2;
    for (float& v : a3.px) v += 0.2f;
    for (float& v : b3.px) v += 0.2f;
    CHECK(psnr(a2, b2) == doctest::Approx(psnr(a3, b3)).epsilon(1e-4));
}

TEST_CASE("ssim golden values") {
    Image a = random_image(16, 16, 4);
    CHECK(ssim(a, a) == 1.0);

    // constants: zero-variance windows give the closed form
    Image b = constant_image(16, 16, 0.3f);
    Image c = constant_image(16, 16, 0.7f);
    const double c1 = 1e-4;
    double mu_a = double(0.3f), mu_b = double(0.7f);
    double want = (2 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
    CHECK(std::fabs(ssim(b, c) - want) < 1e-9);

    CHECK(ssim(a, random_image(16, 16, 5)) ==
          doctest::Approx(ssim(random_image(16, 16, 5), a)).epsilon(1e-12));
    CHECK_THROWS_AS(ssim(constant_image(8, 8, 0.1f), constant_image(8, 8, 0.1f)),
                    InvalidArgument);  // smaller than the window
}

TEST_CASE("ssim decreases as noise grows") {
    Image a = random_image(32, 32, 6);
    Rng rng(7);
    double prev = 1.0;
    for (double amp : {0.05, 0.15, 0.4}) {
        Image noisy = a;
        for (float& v : noisy.px)
            v = float(std::clamp(double(v) + rng.uniform(-amp, amp), 0.0, 1.0));
        double s = ssim(a, noisy);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("metric modes") {
    CHECK(parse_metric_mode("rgb") == MetricMode::rgb);
    CHECK(parse_metric_mode("y601") == MetricMode::y601);
    CHECK_THROWS_AS(parse_metric_mode("lab"), InvalidArgument);
    Image a = random_image(16, 16, 8);
    Image b = random_image(16, 16, 9);
    CHECK(std::isfinite(psnr(a, b, MetricMode::y601)));
    CHECK(std::isfinite(ssim(a, b, MetricMode::y601)));
}

TEST_CASE("format_metric uses the inf sentinel") {
    CHECK(format_metric(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_metric(20.0) == "20.000000");
}

TEST_CASE("eval report aggregate equals the weighted per-rate mean") {
    EvalReport rep;
    rep.method = "m";
    rep.dataset = "d";
    rep.per_rate.push_back({"1/8", 10, 0, 20.0, 0.5});
    rep.per_rate.push_back({"1/4", 30, 0, 30.0, 0.9});
    rep.finalize();
    CHECK(rep.aggregate.n == 40);
    CHECK(rep.aggregate.psnr_db == doctest::Approx((10 * 20.0 + 30 * 30.0) / 40).epsilon(1e-12));
    CHECK(rep.aggregate.ssim == doctest::Approx((10 * 0.5 + 30 * 0.9) / 40).epsilon(1e-12));
    rep.check_consistency();

    // a tampered aggregate must fail the invariant
    EvalReport bad = rep;
    bad.aggregate.psnr_db += 0.1;
    CHECK_THROWS_AS(bad.check_consistency(), RuntimeFailure);
}

TEST_CASE("eval report excludes inf rows from the psnr mean with a count") {
    EvalReport rep;
    rep.method = "bicubic";
    rep.dataset = "d";
    rep.per_rate.push_back({"1/2", 5, 0, 25.0, 0.8});
    rep.per_rate.push_back({"1", 5, 5, std::numeric_limits<double>::infinity(), 1.0});
    rep.finalize();
    CHECK(rep.aggregate.n == 10);
    CHECK(rep.aggregate.n_inf == 5);
    CHECK(rep.aggregate.psnr_db == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(rep.aggregate.ssim == doctest::Approx(0.9).epsilon(1e-12));
    rep.check_consistency();
}

TEST_CASE("report csv round trip") {
    EvalReport rep;
    rep.method = "model";
    rep.dataset = "celeb";
    rep.per_rate.push_back({"1/8", 4, 0, 21.5, 0.61});
    rep.per_rate.push_back({"1/2", 4, 0, 33.25, 0.93});
    rep.finalize();
    std::string path = std::filesystem::temp_directory_path().string() + "/ufv_report_rt.csv";
    write_report_csv({rep}, path);
    auto back = read_report_csv(path);
    REQUIRE(back.size() == 1);
    REQUIRE(back[0].per_rate.size() == 2);
    CHECK(back[0].method == "model");
    CHECK(back[0].per_rate[1].psnr_db == doctest::Approx(33.25).epsilon(1e-6));
    CHECK(back[0].aggregate.n == 8);
}
