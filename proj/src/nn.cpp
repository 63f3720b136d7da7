#include "nn.hpp"

#include <Eigen/Core>

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ufv {

namespace {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using EMap = Eigen::Map<EMat<T>>;
template <typename T>
using ECMap = Eigen::Map<const EMat<T>>;

// scatter one sample's input plane into the [in_ch*k*k, oh*ow] column buffer
template <typename T>
void im2col(const T* x, int cin, int h, int w, int k, int stride, int pad, int oh, int ow,
            T* col) {
    for (int ic = 0; ic < cin; ++ic) {
        const T* plane = x + size_t(ic) * h * w;
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* row = col + size_t((ic * k + ky) * k + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + ky - pad;
                    T* dst = row + size_t(oy) * ow;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < ow; ++ox) dst[ox] = T(0);
                        continue;
                    }
                    const T* src = plane + size_t(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + kx - pad;
                        dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
    }
}

template <typename T>
void col2im(const T* col, int cin, int h, int w, int k, int stride, int pad, int oh, int ow,
            T* x) {
    for (int ic = 0; ic < cin; ++ic) {
        T* plane = x + size_t(ic) * h * w;
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* row = col + size_t((ic * k + ky) * k + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = plane + size_t(iy) * w;
                    const T* src = row + size_t(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
    }
}

}  // namespace

// ----------------------------------------------------------------- Conv2d --

template <typename T>
void Conv2d<T>::init(int in_channels, int out_channels, int kernel, int stride_, int pad_,
                     Rng& rng, double gain) {
    init_zero(in_channels, out_channels, kernel, stride_, pad_);
    double fan_in = double(in_ch) * ksize * ksize;
    double std = gain / std::sqrt(fan_in);
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = T(rng.normal() * std);
}

template <typename T>
void Conv2d<T>::init_zero(int in_channels, int out_channels, int kernel, int stride_, int pad_) {
    in_ch = in_channels;
    out_ch = out_channels;
    ksize = kernel;
    stride = stride_;
    pad = pad_;
    w = TensorT<T>({out_ch, in_ch * ksize * ksize});
    b = TensorT<T>({out_ch});
    gw = TensorT<T>({out_ch, in_ch * ksize * ksize});
    gb = TensorT<T>({out_ch});
}

template <typename T>
std::array<int, 2> Conv2d<T>::out_hw(int h, int w_) const {
    int oh = (h + 2 * pad - ksize) / stride + 1;
    int ow = (w_ + 2 * pad - ksize) / stride + 1;
    if (oh < 1 || ow < 1) throw InvalidArgument("conv output collapsed to zero size");
    return {oh, ow};
}

template <typename T>
TensorT<T> Conv2d<T>::forward(const TensorT<T>& x) {
    if (x.rank() != 4 || x.dim(1) != in_ch)
        throw InvalidArgument("conv2d: expected [N," + std::to_string(in_ch) + ",H,W], got " +
                              x.shape_str());
    x_cache = x;
    const int n = x.dim(0), h = x.dim(2), w_ = x.dim(3);
    auto [oh, ow] = out_hw(h, w_);
    TensorT<T> y({n, out_ch, oh, ow});
    const int ck = in_ch * ksize * ksize;

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n; ++i) {
        AlignedVec<T> col(size_t(ck) * oh * ow);
        im2col(x.data() + size_t(i) * in_ch * h * w_, in_ch, h, w_, ksize, stride, pad, oh, ow,
               col.data());
        ECMap<T> cm(col.data(), ck, oh * ow);
        ECMap<T> wm(w.data(), out_ch, ck);
        EMap<T> ym(y.data() + size_t(i) * out_ch * oh * ow, out_ch, oh * ow);
        ym.noalias() = wm * cm;
        for (int oc = 0; oc < out_ch; ++oc) ym.row(oc).array() += b[oc];
    }
    return y;
}

template <typename T>
TensorT<T> Conv2d<T>::backward(const TensorT<T>& gy) {
    const TensorT<T>& x = x_cache;
    const int n = x.dim(0), h = x.dim(2), w_ = x.dim(3);
    auto [oh, ow] = out_hw(h, w_);
    if (gy.dim(0) != n || gy.dim(1) != out_ch || gy.dim(2) != oh || gy.dim(3) != ow)
        throw InvalidArgument("conv2d backward: bad grad shape " + gy.shape_str());
    const int ck = in_ch * ksize * ksize;

    TensorT<T> gx({n, in_ch, h, w_});
    std::vector<AlignedVec<T>> gw_part(static_cast<size_t>(n));
    std::vector<AlignedVec<T>> gb_part(static_cast<size_t>(n));

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n; ++i) {
        AlignedVec<T> col(size_t(ck) * oh * ow);
        im2col(x.data() + size_t(i) * in_ch * h * w_, in_ch, h, w_, ksize, stride, pad, oh, ow,
               col.data());
        ECMap<T> cm(col.data(), ck, oh * ow);
        ECMap<T> gym(gy.data() + size_t(i) * out_ch * oh * ow, out_ch, oh * ow);
        ECMap<T> wm(w.data(), out_ch, ck);

        gw_part[size_t(i)].assign(size_t(out_ch) * ck, T(0));
        EMap<T> gwp(gw_part[size_t(i)].data(), out_ch, ck);
        gwp.noalias() = gym * cm.transpose();

        gb_part[size_t(i)].resize(size_t(out_ch));
        for (int oc = 0; oc < out_ch; ++oc) {
            const T* row = gy.data() + (size_t(i) * out_ch + size_t(oc)) * oh * ow;
            T acc = T(0);
            for (int64_t j = 0; j < int64_t(oh) * ow; ++j) acc += row[j];
            gb_part[size_t(i)][size_t(oc)] = acc;
        }

        AlignedVec<T> gcol(size_t(ck) * oh * ow);
        EMap<T> gcm(gcol.data(), ck, oh * ow);
        gcm.noalias() = wm.transpose() * gym;
        col2im(gcol.data(), in_ch, h, w_, ksize, stride, pad, oh, ow,
               gx.data() + size_t(i) * in_ch * h * w_);
    }

    // fixed-order reduction keeps gradients identical for any thread count
    for (int i = 0; i < n; ++i) {
        for (int64_t j = 0; j < gw.numel(); ++j) gw[j] += gw_part[size_t(i)][size_t(j)];
        for (int oc = 0; oc < out_ch; ++oc) gb[oc] += gb_part[size_t(i)][size_t(oc)];
    }
    return gx;
}

template <typename T>
void Conv2d<T>::collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

// ----------------------------------------------------------------- Linear --

template <typename T>
void Linear<T>::init(int in_d, int out_d, Rng& rng, double gain) {
    in_dim = in_d;
    out_dim = out_d;
    w = TensorT<T>({out_dim, in_dim});
    b = TensorT<T>({out_dim});
    gw = TensorT<T>({out_dim, in_dim});
    gb = TensorT<T>({out_dim});
    double std = gain / std::sqrt(double(in_dim));
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = T(rng.normal() * std);
}

template <typename T>
TensorT<T> Linear<T>::forward(const TensorT<T>& x) {
    if (x.rank() != 2 || x.dim(1) != in_dim)
        throw InvalidArgument("linear: expected [N," + std::to_string(in_dim) + "], got " +
                              x.shape_str());
    x_cache = x;
    const int n = x.dim(0);
    TensorT<T> y({n, out_dim});
    ECMap<T> xm(x.data(), n, in_dim);
    ECMap<T> wm(w.data(), out_dim, in_dim);
    EMap<T> ym(y.data(), n, out_dim);
    ym.noalias() = xm * wm.transpose();
    for (int i = 0; i < n; ++i)
        for (int o = 0; o < out_dim; ++o) y[size_t(i) * out_dim + o] += b[o];
    return y;
}

template <typename T>
TensorT<T> Linear<T>::backward(const TensorT<T>& gy) {
    const int n = x_cache.dim(0);
    TensorT<T> gx({n, in_dim});
    ECMap<T> gym(gy.data(), n, out_dim);
    ECMap<T> xm(x_cache.data(), n, in_dim);
    ECMap<T> wm(w.data(), out_dim, in_dim);
    EMap<T> gxm(gx.data(), n, in_dim);
    EMap<T> gwm(gw.data(), out_dim, in_dim);
    gxm.noalias() = gym * wm;
    gwm.noalias() += gym.transpose() * xm;
    for (int i = 0; i < n; ++i)
        for (int o = 0; o < out_dim; ++o) gb[o] += gy[size_t(i) * out_dim + o];
    return gx;
}

template <typename T>
void Linear<T>::collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

// ----------------------------------------------------------- InstanceNorm --

template <typename T>
TensorT<T> InstanceNorm<T>::forward(const TensorT<T>& x) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int64_t hw = int64_t(h) * w;
    TensorT<T> y(x.shape());
    istd_cache.assign(size_t(n) * c, T(0));

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* xp = x.data() + nc * hw;
        T* yp = y.data() + nc * hw;
        double mean = 0.0;
        for (int64_t i = 0; i < hw; ++i) mean += double(xp[i]);
        mean /= double(hw);
        double var = 0.0;
        for (int64_t i = 0; i < hw; ++i) {
            double d = double(xp[i]) - mean;
            var += d * d;
        }
        var /= double(hw);
        double istd = 1.0 / std::sqrt(var + 1e-5);
        istd_cache[size_t(nc)] = T(istd);
        for (int64_t i = 0; i < hw; ++i) yp[i] = T((double(xp[i]) - mean) * istd);
    }
    xhat_cache = y;
    return y;
}

template <typename T>
TensorT<T> InstanceNorm<T>::backward(const TensorT<T>& gy) {
    const auto& shape = xhat_cache.shape();
    const int n = shape[0], c = shape[1], h = shape[2], w = shape[3];
    const int64_t hw = int64_t(h) * w;
    TensorT<T> gx(shape);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* gp = gy.data() + nc * hw;
        const T* xh = xhat_cache.data() + nc * hw;
        T* gxp = gx.data() + nc * hw;
        double mg = 0.0, mgx = 0.0;
        for (int64_t i = 0; i < hw; ++i) {
            mg += double(gp[i]);
            mgx += double(gp[i]) * double(xh[i]);
        }
        mg /= double(hw);
        mgx /= double(hw);
        double istd = double(istd_cache[size_t(nc)]);
        for (int64_t i = 0; i < hw; ++i)
            gxp[i] = T(istd * (double(gp[i]) - mg - double(xh[i]) * mgx));
    }
    return gx;
}

// ------------------------------------------------------------ activations --

template <typename T>
TensorT<T> LeakyRelu<T>::forward(const TensorT<T>& x) {
    TensorT<T> y(x.shape());
    mask_cache.assign(size_t(x.numel()), 0);
    for (int64_t i = 0; i < x.numel(); ++i) {
        bool pos = x[i] >= T(0);
        mask_cache[size_t(i)] = pos;
        y[i] = pos ? x[i] : slope * x[i];
    }
    return y;
}

template <typename T>
TensorT<T> LeakyRelu<T>::backward(const TensorT<T>& gy) {
    TensorT<T> gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) gx[i] = mask_cache[size_t(i)] ? gy[i] : slope * gy[i];
    return gx;
}

template <typename T>
TensorT<T> Relu<T>::forward(const TensorT<T>& x) {
    TensorT<T> y(x.shape());
    mask_cache.assign(size_t(x.numel()), 0);
    for (int64_t i = 0; i < x.numel(); ++i) {
        bool pos = x[i] > T(0);
        mask_cache[size_t(i)] = pos;
        y[i] = pos ? x[i] : T(0);
    }
    return y;
}

template <typename T>
TensorT<T> Relu<T>::backward(const TensorT<T>& gy) {
    TensorT<T> gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) gx[i] = mask_cache[size_t(i)] ? gy[i] : T(0);
    return gx;
}

template <typename T>
TensorT<T> Sigmoid<T>::forward(const TensorT<T>& x) {
    TensorT<T> y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
    y_cache = y;
    return y;
}

template <typename T>
TensorT<T> Sigmoid<T>::backward(const TensorT<T>& gy) {
    TensorT<T> gx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) {
        T y = y_cache[i];
        gx[i] = gy[i] * y * (T(1) - y);
    }
    return gx;
}

// ---------------------------------------------------------------- pooling --

template <typename T>
TensorT<T> AvgPool2<T>::forward(const TensorT<T>& x) {
    in_shape_cache = x.shape();
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h / 2, ow = w / 2;
    if (oh < 1 || ow < 1) throw InvalidArgument("avgpool: input too small " + x.shape_str());
    TensorT<T> y({n, c, oh, ow});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* xp = x.data() + nc * h * w;
        T* yp = y.data() + nc * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                const T* p = xp + size_t(2 * oy) * w + 2 * ox;
                yp[size_t(oy) * ow + ox] = (p[0] + p[1] + p[w] + p[w + 1]) * T(0.25);
            }
    }
    return y;
}

template <typename T>
TensorT<T> AvgPool2<T>::backward(const TensorT<T>& gy) {
    const int n = in_shape_cache[0], c = in_shape_cache[1], h = in_shape_cache[2],
              w = in_shape_cache[3];
    const int oh = h / 2, ow = w / 2;
    TensorT<T> gx({n, c, h, w});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* gp = gy.data() + nc * oh * ow;
        T* gxp = gx.data() + nc * h * w;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                T g = gp[size_t(oy) * ow + ox] * T(0.25);
                T* p = gxp + size_t(2 * oy) * w + 2 * ox;
                p[0] += g;
                p[1] += g;
                p[w] += g;
                p[w + 1] += g;
            }
    }
    return gx;
}

template <typename T>
TensorT<T> MaxPool<T>::forward(const TensorT<T>& x) {
    in_shape_cache = x.shape();
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = (h - ksize) / stride + 1, ow = (w - ksize) / stride + 1;
    if (oh < 1 || ow < 1) throw InvalidArgument("maxpool: input too small " + x.shape_str());
    TensorT<T> y({n, c, oh, ow});
    argmax_cache.assign(size_t(y.numel()), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* xp = x.data() + nc * h * w;
        T* yp = y.data() + nc * oh * ow;
        int32_t* am = argmax_cache.data() + nc * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                T best = xp[size_t(oy * stride) * w + ox * stride];
                int32_t best_i = int32_t(oy * stride * w + ox * stride);
                for (int ky = 0; ky < ksize; ++ky)
                    for (int kx = 0; kx < ksize; ++kx) {
                        int iy = oy * stride + ky, ix = ox * stride + kx;
                        T v = xp[size_t(iy) * w + ix];
                        if (v > best) {
                            best = v;
                            best_i = int32_t(iy * w + ix);
                        }
                    }
                yp[size_t(oy) * ow + ox] = best;
                am[size_t(oy) * ow + ox] = best_i;
            }
    }
    return y;
}

template <typename T>
TensorT<T> MaxPool<T>::backward(const TensorT<T>& gy) {
    const int n = in_shape_cache[0], c = in_shape_cache[1], h = in_shape_cache[2],
              w = in_shape_cache[3];
    const int oh = (h - ksize) / stride + 1, ow = (w - ksize) / stride + 1;
    TensorT<T> gx({n, c, h, w});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* gp = gy.data() + nc * oh * ow;
        const int32_t* am = argmax_cache.data() + nc * oh * ow;
        T* gxp = gx.data() + nc * h * w;
        for (int64_t i = 0; i < int64_t(oh) * ow; ++i) gxp[am[i]] += gp[i];
    }
    return gx;
}

// --------------------------------------------------------------- upsample --

template <typename T>
TensorT<T> UpsampleNearest<T>::forward(const TensorT<T>& x, int target_h, int target_w) {
    in_shape_cache = x.shape();
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    TensorT<T> y({n, c, target_h, target_w});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* xp = x.data() + nc * h * w;
        T* yp = y.data() + nc * target_h * target_w;
        for (int oy = 0; oy < target_h; ++oy) {
            int iy = std::min(oy / 2, h - 1);
            for (int ox = 0; ox < target_w; ++ox)
                yp[size_t(oy) * target_w + ox] = xp[size_t(iy) * w + std::min(ox / 2, w - 1)];
        }
    }
    return y;
}

template <typename T>
TensorT<T> UpsampleNearest<T>::backward(const TensorT<T>& gy) {
    const int n = in_shape_cache[0], c = in_shape_cache[1], h = in_shape_cache[2],
              w = in_shape_cache[3];
    const int th = gy.dim(2), tw = gy.dim(3);
    TensorT<T> gx({n, c, h, w});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t nc = 0; nc < int64_t(n) * c; ++nc) {
        const T* gp = gy.data() + nc * th * tw;
        T* gxp = gx.data() + nc * h * w;
        for (int oy = 0; oy < th; ++oy) {
            int iy = std::min(oy / 2, h - 1);
            for (int ox = 0; ox < tw; ++ox)
                gxp[size_t(iy) * w + std::min(ox / 2, w - 1)] += gp[size_t(oy) * tw + ox];
        }
    }
    return gx;
}

// ---------------------------------------------------------------- softmax --

template <typename T>
TensorT<T> Softmax<T>::forward(const TensorT<T>& x) {
    const int n = x.dim(0), k = x.dim(1);
    TensorT<T> p(x.shape());
    for (int i = 0; i < n; ++i) {
        const T* xp = x.data() + size_t(i) * k;
        T* pp = p.data() + size_t(i) * k;
        T mx = xp[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, xp[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            double e = std::exp(double(xp[j] - mx));
            pp[j] = T(e);
            sum += e;
        }
        for (int j = 0; j < k; ++j) pp[j] = T(double(pp[j]) / sum);
    }
    p_cache = p;
    return p;
}

template <typename T>
TensorT<T> Softmax<T>::backward(const TensorT<T>& gy) {
    const int n = gy.dim(0), k = gy.dim(1);
    TensorT<T> gx(gy.shape());
    for (int i = 0; i < n; ++i) {
        const T* gp = gy.data() + size_t(i) * k;
        const T* pp = p_cache.data() + size_t(i) * k;
        double dot = 0.0;
        for (int j = 0; j < k; ++j) dot += double(gp[j]) * double(pp[j]);
        for (int j = 0; j < k; ++j)
            gx[size_t(i) * k + j] = T(double(pp[j]) * (double(gp[j]) - dot));
    }
    return gx;
}

// ------------------------------------------------------------ elementwise --

template <typename T>
TensorT<T> ew_mul(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "ew_mul");
    TensorT<T> y(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * b[i];
    return y;
}

template <typename T>
TensorT<T> ew_add(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "ew_add");
    TensorT<T> y(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
    return y;
}

template <typename T>
void ew_add_inplace(TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "ew_add_inplace");
    for (int64_t i = 0; i < a.numel(); ++i) a[i] += b[i];
}

// explicit instantiations
#define UFV_INSTANTIATE(T)                                     \
    template struct Conv2d<T>;                                 \
    template struct Linear<T>;                                 \
    template struct InstanceNorm<T>;                           \
    template struct LeakyRelu<T>;                              \
    template struct Relu<T>;                                   \
    template struct Sigmoid<T>;                                \
    template struct AvgPool2<T>;                               \
    template struct MaxPool<T>;                                \
    template struct UpsampleNearest<T>;                        \
    template struct Softmax<T>;                                \
    template TensorT<T> ew_mul<T>(const TensorT<T>&, const TensorT<T>&); \
    template TensorT<T> ew_add<T>(const TensorT<T>&, const TensorT<T>&); \
    template void ew_add_inplace<T>(TensorT<T>&, const TensorT<T>&);

UFV_INSTANTIATE(float)
UFV_INSTANTIATE(double)

}  // namespace ufv
