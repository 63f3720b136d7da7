#include "synth.hpp"

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace ufv {

namespace {

struct Color {
    float r, g, b;
};

Color mix(const Color& a, const Color& b, float t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// rotated soft-edged ellipse; edge softness in pixels
struct Ellipse {
    float cx, cy, rx, ry, angle;
    Color color;
    float edge = 1.2f;

    float coverage(float x, float y) const {
        float dx = x - cx, dy = y - cy;
        float ca = std::cos(angle), sa = std::sin(angle);
        float u = (dx * ca + dy * sa) / rx;
        float v = (-dx * sa + dy * ca) / ry;
        float d = std::sqrt(u * u + v * v);
        // distance to the unit circle in pixel units (approx via min radius)
        float px = (d - 1.0f) * std::min(rx, ry);
        float t = std::clamp(0.5f - px / edge, 0.0f, 1.0f);
        return t;
    }
};

void paint(Image& img, const Ellipse& e) {
    int x0 = std::max(0, int(e.cx - std::max(e.rx, e.ry) - 2));
    int x1 = std::min(img.w - 1, int(e.cx + std::max(e.rx, e.ry) + 2));
    int y0 = std::max(0, int(e.cy - std::max(e.rx, e.ry) - 2));
    int y1 = std::min(img.h - 1, int(e.cy + std::max(e.rx, e.ry) + 2));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            float a = e.coverage(x + 0.5f, y + 0.5f);
            if (a <= 0.0f) continue;
            img.at(y, x, 0) += (e.color.r - img.at(y, x, 0)) * a;
            img.at(y, x, 1) += (e.color.g - img.at(y, x, 1)) * a;
            img.at(y, x, 2) += (e.color.b - img.at(y, x, 2)) * a;
        }
}

}  // namespace

Image synth_face(int size, uint64_t seed, uint64_t index) {
    if (size < 16) throw InvalidArgument("synthetic face size must be >= 16");
    Rng rng = Rng(seed).fork(index);
    const float s = float(size);

    auto frnd = [&](double lo, double hi) { return float(rng.uniform(lo, hi)); };

    Image img(size, size, 3);

    // background gradient
    Color bg_top{frnd(0.25, 0.85), frnd(0.25, 0.85), frnd(0.35, 0.9)};
    Color bg_bot{frnd(0.1, 0.6), frnd(0.1, 0.6), frnd(0.15, 0.7)};
    for (int y = 0; y < size; ++y) {
        Color c = mix(bg_top, bg_bot, float(y) / float(size - 1));
        for (int x = 0; x < size; ++x) {
            img.at(y, x, 0) = c.r;
            img.at(y, x, 1) = c.g;
            img.at(y, x, 2) = c.b;
        }
    }

    float cx = s * frnd(0.46, 0.54);
    float cy = s * frnd(0.5, 0.58);
    float head_rx = s * frnd(0.26, 0.34);
    float head_ry = s * frnd(0.32, 0.4);

    // hair mass behind the head
    float hair_shade = frnd(0.05, 0.45);
    Color hair{hair_shade, hair_shade * frnd(0.6, 1.0f), hair_shade * frnd(0.4, 0.9)};
    paint(img, {cx, cy - head_ry * 0.25f, head_rx * frnd(1.15, 1.35), head_ry * frnd(1.05, 1.25),
                0.0f, hair});

    // skin
    float tone = frnd(0.45, 0.9);
    Color skin{tone, tone * frnd(0.72, 0.85), tone * frnd(0.55, 0.72)};
    paint(img, {cx, cy, head_rx, head_ry, 0.0f, skin});

    // forehead hairline
    paint(img, {cx, cy - head_ry * frnd(0.78, 0.95), head_rx * frnd(0.85, 1.05),
                head_ry * frnd(0.28, 0.42), 0.0f, hair});

    float eye_dx = head_rx * frnd(0.4, 0.52);
    float eye_y = cy - head_ry * frnd(0.12, 0.22);
    float eye_rx = head_rx * frnd(0.16, 0.24);
    float eye_ry = eye_rx * frnd(0.5, 0.7);
    Color sclera{0.93f, 0.93f, 0.9f};
    Color iris{frnd(0.1, 0.5), frnd(0.2, 0.55), frnd(0.3, 0.75)};
    Color pupil{0.05f, 0.05f, 0.08f};
    float gaze = eye_rx * frnd(-0.25, 0.25);
    for (int side : {-1, 1}) {
        float ex = cx + side * eye_dx;
        paint(img, {ex, eye_y, eye_rx, eye_ry, 0.0f, sclera});
        paint(img, {ex + gaze, eye_y, eye_ry * 0.72f, eye_ry * 0.72f, 0.0f, iris});
        paint(img, {ex + gaze, eye_y, eye_ry * 0.34f, eye_ry * 0.34f, 0.0f, pupil});
        // brow
        float tilt = frnd(-0.25, 0.25) * float(side);
        paint(img, {ex, eye_y - eye_ry * frnd(1.6, 2.3), eye_rx * frnd(1.0, 1.25),
                    eye_ry * frnd(0.22, 0.4), tilt, hair});
    }

    // nose
    Color nose = mix(skin, {0.0f, 0.0f, 0.0f}, frnd(0.12, 0.25));
    paint(img, {cx + gaze * 0.3f, cy + head_ry * frnd(0.08, 0.18), head_rx * frnd(0.07, 0.11),
                head_ry * frnd(0.16, 0.26), 0.0f, nose});

    // mouth
    Color lips{frnd(0.5, 0.8), frnd(0.15, 0.35), frnd(0.2, 0.35)};
    paint(img, {cx, cy + head_ry * frnd(0.48, 0.62), head_rx * frnd(0.3, 0.45),
                head_ry * frnd(0.08, 0.16), frnd(-0.08, 0.08), lips});

    return clamp01(std::move(img));
}

void make_corpus(const std::string& dir, int count, int size, uint64_t seed) {
    if (count < 1) throw InvalidArgument("corpus count must be >= 1");
    std::filesystem::create_directories(dir);
    char name[64];
    for (int i = 0; i < count; ++i) {
        std::snprintf(name, sizeof(name), "face_%05d.png", i);
        save_png(synth_face(size, seed, uint64_t(i)), dir + "/" + name);
    }
}

}  // namespace ufv
