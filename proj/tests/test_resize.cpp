#include <doctest.h>

#include "resize.hpp"
#include "rng.hpp"

#include <cmath>

using namespace ufv;

namespace {

// independent oracle: direct 2D evaluation of the cubic convolution kernel
// (a = -0.5) at half-pixel-center sample positions with clamped borders
double keys_oracle(double t) {
    double x = std::fabs(t);
    if (x <= 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

Image resize_oracle(const Image& src, int th, int tw) {
    Image out(th, tw, src.c);
    double sy = double(src.h) / th, sx = double(src.w) / tw;
    for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) {
            double fy = (y + 0.5) * sy - 0.5;
            double fx = (x + 0.5) * sx - 0.5;
            int by = int(std::floor(fy)), bx = int(std::floor(fx));
            for (int ch = 0; ch < src.c; ++ch) {
                double acc = 0.0;
                for (int ky = -1; ky <= 2; ++ky)
                    for (int kx = -1; kx <= 2; ++kx) {
                        int iy = std::clamp(by + ky, 0, src.h - 1);
                        int ix = std::clamp(bx + kx, 0, src.w - 1);
                        acc += keys_oracle(fy - (by + ky)) * keys_oracle(fx - (bx + kx)) *
                               src.at(iy, ix, ch);
                    }
                out.at(y, x, ch) = float(std::clamp(acc, 0.0, 1.0));
            }
        }
    return out;
}

Image random_image(int h, int w, Rng& rng) {
    Image img(h, w, 3);
    for (float& v : img.px) v = float(rng.next_double());
    return img;
}

}  // namespace

TEST_CASE("bicubic preserves constant images") {
    Image img(7, 5, 3);
    for (float& v : img.px) v = 0.5f;
    for (auto [th, tw] : {std::pair{3, 9}, {14, 10}, {2, 2}}) {
        Image out = bicubic_resize(img, th, tw);
        REQUIRE(out.h == th);
        REQUIRE(out.w == tw);
        for (float v : out.px) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));
    }
}

TEST_CASE("bicubic identity when target equals source") {
    Rng rng(42);
    Image img = random_image(9, 6, rng);
    Image out = bicubic_resize(img, 9, 6);
    REQUIRE(out.px.size() == img.px.size());
    for (size_t i = 0; i < img.px.size(); ++i) CHECK(out.px[i] == img.px[i]);
}

TEST_CASE("bicubic matches direct kernel evaluation on a ramp") {
    Image ramp(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) ramp.at(y, x, 0) = (y * 4 + x) / 16.0f;
    Image got = bicubic_resize(ramp, 2, 2);
    Image want = resize_oracle(ramp, 2, 2);
    for (size_t i = 0; i < got.px.size(); ++i)
        CHECK(double(got.px[i]) == doctest::Approx(double(want.px[i])).epsilon(1e-9));
}

TEST_CASE("bicubic matches direct kernel evaluation up and down") {
    Rng rng(7);
    Image img = random_image(12, 16, rng);
    for (auto [th, tw] : {std::pair{6, 8}, {24, 32}, {5, 17}}) {
        Image got = bicubic_resize(img, th, tw);
        Image want = resize_oracle(img, th, tw);
        double max_err = 0.0;
        for (size_t i = 0; i < got.px.size(); ++i)
            max_err = std::max(max_err, std::fabs(double(got.px[i]) - double(want.px[i])));
        CHECK(max_err < 1e-6);
    }
}

TEST_CASE("bicubic is deterministic and clamps to range") {
    Rng rng(9);
    Image img = random_image(16, 16, rng);
    Image a = bicubic_resize(img, 40, 8);
    Image b = bicubic_resize(img, 40, 8);
    for (size_t i = 0; i < a.px.size(); ++i) {
        CHECK(a.px[i] == b.px[i]);
        CHECK(a.px[i] >= 0.0f);
        CHECK(a.px[i] <= 1.0f);
    }
}

TEST_CASE("bicubic rejects bad targets") {
    Image img(4, 4, 1);
    CHECK_THROWS_AS(bicubic_resize(img, 0, 4), InvalidArgument);
    CHECK_THROWS_AS(bicubic_resize(img, 4, -1), InvalidArgument);
    CHECK_THROWS_AS(bicubic_resize(Image(), 4, 4), InvalidArgument);
}
