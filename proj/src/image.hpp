#pragma once

#include "common.hpp"
#include "tensor.hpp"

#include <string>
#include <vector>

namespace ufv {

// HWC interleaved image, float values in [0,1]. The pipeline currency: loaded
// from 8-bit PNG/JPEG, written back as 8-bit PNG.
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> px;

    Image() = default;
    Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_), px(size_t(h_) * w_ * c_, 0.0f) {}

    float& at(int y, int x, int ch) { return px[(size_t(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return px[(size_t(y) * w + x) * c + ch]; }
    bool empty() const { return px.empty(); }
    size_t numel() const { return px.size(); }
};

Image load_image(const std::string& path);          // PNG or JPEG, any bit layout -> RGB float
void save_png(const Image& img, const std::string& path);

// 8-bit quantization used when*writing; also handy for compact in-memory caches.
std::vector<uint8_t> to_u8(const Image& img);
Image from_u8(const std::vector<uint8_t>& bytes, int h, int w, int c);

// batch conversion helpers (NCHW float tensors for the model side)
void image_to_chw(const Image& img, float* dst);            // dst: [c,h,w]
Image chw_to_image(const float* src, int c, int h, int w);  // values clamped to [0,1]

Image clamp01(Image img);

}  // namespace ufv
