#pragma once

#include "nn.hpp"

#include <optional>

namespace ufv {

enum class Resample { none, down2, up2 };

// Test hook: force the attention mask to a constant. The attention block ends
// in a sigmoid, so an exactly-zero (or -one) mask is unreachable through the
// parameters; identity/surgery checks use this instead.
enum class AttnOverride { none, zero, one };

struct FauSpec {
    int in_ch = 0;
    int out_ch = 0;
    Resample resample = Resample::none;
};

// Face attention unit: a feature branch and a spatial attention branch joined
// by elementwise multiply, plus a residual connection:
//   fB1  = B1(x)            B1 = [norm -> lrelu(0.2) -> conv3x3] x 2
//   mask = B2(fB1)          B2 = pool2 -> conv3x3 -> lrelu -> conv3x3 -> up -> sigmoid
//   out  = fB1 * mask + residual(x)
// down2 puts stride 2 in B1's first conv; up2 nearest-upsamples before it. The
// residual path mirrors the resampling (avgpool / nearest) and projects with a
// 1x1 conv when channel counts differ, so resample=none with equal channels is
// a strict identity when the mask is forced to zero.
template <typename T>
struct Fau {
    FauSpec spec;

    InstanceNorm<T> n1, n2;
    LeakyRelu<T> a1{0.2}, a2{0.2};
    UpsampleNearest<T> b1_up;
    Conv2d<T> c1, c2;

    AvgPool2<T> att_pool;
    Conv2d<T> att_c1, att_c2;
    LeakyRelu<T> att_act{0.2};
    UpsampleNearest<T> att_up;
    Sigmoid<T> att_sig;

    AvgPool2<T> res_pool;
    UpsampleNearest<T> res_up;
    std::optional<Conv2d<T>> res_proj;

    AttnOverride attn_override = AttnOverride::none;

    void init(const FauSpec& s, Rng& rng);
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    void collect(ParamList<T>& out, const std::string& prefix);

  private:
    TensorT<T> fb1_cache, mask_cache;
    bool override_active_ = false;
};

}  // namespace ufv
