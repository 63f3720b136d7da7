#include "fau.hpp"

#include <cmath>

namespace ufv {

template <typename T>
void Fau<T>::init(const FauSpec& s, Rng& rng) {
    spec = s;
    if (s.in_ch <= 0 || s.out_ch <= 0) throw InvalidArgument("fau: channels must be positive");
    const double lrelu_gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
    int c1_stride = s.resample == Resample::down2 ? 2 : 1;
    c1.init(s.in_ch, s.out_ch, 3, c1_stride, 1, rng, lrelu_gain);
    c2.init(s.out_ch, s.out_ch, 3, 1, 1, rng, lrelu_gain);
    att_c1.init(s.out_ch, s.out_ch, 3, 1, 1, rng, lrelu_gain);
    att_c2.init(s.out_ch, s.out_ch, 3, 1, 1, rng, 1.0);
    if (s.in_ch != s.out_ch) {
        res_proj.emplace();
        res_proj->init(s.in_ch, s.out_ch, 1, 1, 0, rng, 1.0);
    }
}

template <typename T>
TensorT<T> Fau<T>::forward(const TensorT<T>& x) {
    // residual path
    TensorT<T> r;
    switch (spec.resample) {
        case Resample::none: r = x; break;
        case Resample::down2: r = res_pool.forward(x); break;
        case Resample::up2: r = res_up.forward(x, x.dim(2) * 2, x.dim(3) * 2); break;
    }
    if (res_proj) r = res_proj->forward(r);

    // feature branch
    TensorT<T> h = n1.forward(x);
    h = a1.forward(h);
    if (spec.resample == Resample::up2) h = b1_up.forward(h, h.dim(2) * 2, h.dim(3) * 2);
    h = c1.forward(h);
    h = n2.forward(h);
    h = a2.forward(h);
    h = c2.forward(h);
    fb1_cache = h;

    // attention branch
    override_active_ = attn_override != AttnOverride::none;
    if (override_active_) {
        mask_cache = TensorT<T>::full(h.shape(), attn_override == AttnOverride::one ? T(1) : T(0));
    } else {
        TensorT<T> m = att_pool.forward(h);
        m = att_c1.forward(m);
        m = att_act.forward(m);
        m = att_c2.forward(m);
        m = att_up.forward(m, h.dim(2), h.dim(3));
        m = att_sig.forward(m);
        mask_cache = std::move(m);
    }

    TensorT<T> out = ew_mul(fb1_cache, mask_cache);
    ew_add_inplace(out, r);
    return out;
}

template <typename T>
TensorT<T> Fau<T>::backward(const TensorT<T>& gy) {
    // product rule through fB1 * mask
    TensorT<T> g_fb1 = ew_mul(gy, mask_cache);
    if (!override_active_) {
        TensorT<T> g_mask = ew_mul(gy, fb1_cache);
        TensorT<T> gm = att_sig.backward(g_mask);
        gm = att_up.backward(gm);
        gm = att_c2.backward(gm);
        gm = att_act.backward(gm);
        gm = att_c1.backward(gm);
        gm = att_pool.backward(gm);
        ew_add_inplace(g_fb1, gm);
    }

    TensorT<T> gx = c2.backward(g_fb1);
    gx = a2.backward(gx);
    gx = n2.backward(gx);
    gx = c1.backward(gx);
    if (spec.resample == Resample::up2) gx = b1_up.backward(gx);
    gx = a1.backward(gx);
    gx = n1.backward(gx);

    // residual path
    TensorT<T> gr = gy;
    if (res_proj) gr = res_proj->backward(gr);
    switch (spec.resample) {
        case Resample::none: break;
        case Resample::down2: gr = res_pool.backward(gr); break;
        case Resample::up2: gr = res_up.backward(gr); break;
    }
    ew_add_inplace(gx, gr);
    return gx;
}

template <typename T>
void Fau<T>::collect(ParamList<T>& out, const std::string& prefix) {
    c1.collect(out, prefix + ".b1.c1");
    c2.collect(out, prefix + ".b1.c2");
    att_c1.collect(out, prefix + ".att.c1");
    att_c2.collect(out, prefix + ".att.c2");
    if (res_proj) res_proj->collect(out, prefix + ".res.proj");
}

template struct Fau<float>;
template struct Fau<double>;

}  // namespace ufv
