#pragma once

#include "image.hpp"

namespace ufv {

// Keys bicubic resampling (a = -0.5), half-pixel-center alignment, clamped
// borders, per-channel. One implementation serves both dataset down-sampling
// and the U(.) up-scaling step at inference; output values are clamped to
// [0,1]. Deterministic: identical inputs give bit-identical outputs.
Image bicubic_resize(const Image& img, int target_h, int target_w);

// Keys kernel weight at offset t (|t| in pixel units), a = -0.5.
double keys_cubic_weight(double t);

}  // namespace ufv
