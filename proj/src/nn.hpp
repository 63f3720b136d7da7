#pragma once

#include "rng.hpp"
#include "tensor.hpp"

#include <string>
#include <vector>

namespace ufv {

template <typename T>
struct ParamRef {
    std::string name;
    TensorT<T>* value;
    TensorT<T>* grad;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;

template <typename T>
void zero_grads(ParamList<T>& params) {
    for (auto& p : params) p.grad->zero();
}

template <typename T>
int64_t count_params(const ParamList<T>& params) {
    int64_t n = 0;
    for (const auto& p : params) n += p.value->numel();
    return n;
}

// ---------------------------------------------------------------------------
// Layers. Each owns its parameters, gradients and whatever forward state the
// backward pass needs. Batch layout is NCHW. Backward returns the gradient
// w.r.t. the layer input and accumulates into the parameter gradients, so
// call zero_grads() once per step. All layers are deterministic: parallel
// regions write disjoint slices and cross-sample reductions run in a fixed
// order, independent of thread count.
// ---------------------------------------------------------------------------

template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 1;
    TensorT<T> w, b, gw, gb;  // w: [out_ch, in_ch*k*k]

    void init(int in_channels, int out_channels, int kernel, int stride_, int pad_, Rng& rng,
              double gain);
    void init_zero(int in_channels, int out_channels, int kernel, int stride_, int pad_);

    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    void collect(ParamList<T>& out, const std::string& prefix);

    std::array<int, 2> out_hw(int h, int w_) const;

    TensorT<T> x_cache;
};

template <typename T>
struct Linear {
    int in_dim = 0, out_dim = 0;
    TensorT<T> w, b, gw, gb;  // w: [out_dim, in_dim]

    void init(int in_d, int out_d, Rng& rng, double gain);
    TensorT<T> forward(const TensorT<T>& x);  // x: [N, in_dim]
    TensorT<T> backward(const TensorT<T>& gy);
    void collect(ParamList<T>& out, const std::string& prefix);

    TensorT<T> x_cache;
};

// Per-sample, per-channel normalization over the spatial extent (no affine
// parameters). Batch-independent, so train and eval behave identically.
template <typename T>
struct InstanceNorm {
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);

    TensorT<T> xhat_cache;
    std::vector<T> istd_cache;
};

template <typename T>
struct LeakyRelu {
    explicit LeakyRelu(double slope = 0.2) : slope(T(slope)) {}
    T slope;
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    std::vector<uint8_t> mask_cache;
};

template <typename T>
struct Relu {
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    std::vector<uint8_t> mask_cache;
};

template <typename T>
struct Sigmoid {
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    TensorT<T> y_cache;
};

// 2x2 stride-2 average pool
template <typename T>
struct AvgPool2 {
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    std::vector<int> in_shape_cache;
};

template <typename T>
struct MaxPool {
    int ksize = 3, stride = 2;
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    std::vector<int> in_shape_cache;
    std::vector<int32_t> argmax_cache;
};

// Nearest-neighbour upsample to an explicit target size (typically 2x).
template <typename T>
struct UpsampleNearest {
    TensorT<T> forward(const TensorT<T>& x, int target_h, int target_w);
    TensorT<T> backward(const TensorT<T>& gy);
    std::vector<int> in_shape_cache;
};

// Row-wise softmax over [N, K].
template <typename T>
struct Softmax {
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    TensorT<T> p_cache;
};

// free elementwise helpers (used by block composition code)
template <typename T>
TensorT<T> ew_mul(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> ew_add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
void ew_add_inplace(TensorT<T>& a, const TensorT<T>& b);

}  // namespace ufv
