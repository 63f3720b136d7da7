#include "model.hpp"

#include <cmath>

namespace ufv {

namespace {
constexpr double kLreluGain = 1.4002800840280099;  // sqrt(2/(1+0.2^2))
}

void SrgSpec::validate() const {
    if (hr_size < 8 || hr_size % 8 != 0)
        throw InvalidArgument("hr_size must be a positive multiple of 8, got " +
                              std::to_string(hr_size));
    if (base_ch < 1) throw InvalidArgument("base_ch must be positive");
}

// ---------------------------------------------------------------- Encoder --

template <typename T>
void Encoder<T>::init(int base_ch, Rng& rng) {
    const int c = base_ch;
    stem.init(3, c, 3, 1, 1, rng, kLreluGain);
    f1.init({c, 2 * c, Resample::down2}, rng);
    f2.init({2 * c, 4 * c, Resample::down2}, rng);
    f3.init({4 * c, 4 * c, Resample::down2}, rng);
}

template <typename T>
TensorT<T> Encoder<T>::forward(const TensorT<T>& x) {
    TensorT<T> h = stem.forward(x);
    h = f1.forward(h);
    h = f2.forward(h);
    h = f3.forward(h);
    return h;
}

template <typename T>
TensorT<T> Encoder<T>::backward(const TensorT<T>& gy) {
    TensorT<T> g = f3.backward(gy);
    g = f2.backward(g);
    g = f1.backward(g);
    return stem.backward(g);
}

template <typename T>
void Encoder<T>::collect(ParamList<T>& out, const std::string& prefix) {
    stem.collect(out, prefix + ".stem");
    f1.collect(out, prefix + ".fau1");
    f2.collect(out, prefix + ".fau2");
    f3.collect(out, prefix + ".fau3");
}

// ---------------------------------------------------------------- Decoder --

template <typename T>
void Decoder<T>::init(int base_ch, Rng& rng, bool zero_out_conv) {
    const int c = base_ch;
    d1.init({4 * c, 4 * c, Resample::up2}, rng);
    d2.init({4 * c, 2 * c, Resample::up2}, rng);
    d3.init({2 * c, c, Resample::up2}, rng);
    if (zero_out_conv)
        out.init_zero(c, 3, 3, 1, 1);
    else
        out.init(c, 3, 3, 1, 1, rng, 1.0);
}

template <typename T>
TensorT<T> Decoder<T>::forward(const TensorT<T>& x) {
    TensorT<T> h = d1.forward(x);
    h = d2.forward(h);
    h = d3.forward(h);
    return out.forward(h);
}

template <typename T>
TensorT<T> Decoder<T>::backward(const TensorT<T>& gy) {
    TensorT<T> g = out.backward(gy);
    g = d3.backward(g);
    g = d2.backward(g);
    return d1.backward(g);
}

template <typename T>
void Decoder<T>::collect(ParamList<T>& out_list, const std::string& prefix) {
    d1.collect(out_list, prefix + ".dec1");
    d2.collect(out_list, prefix + ".dec2");
    d3.collect(out_list, prefix + ".dec3");
    out.collect(out_list, prefix + ".out");
}

// ---------------------------------------------------------------- SrgTail --

template <typename T>
void SrgTail<T>::init(int base_ch, Rng& rng, bool zero_out_conv) {
    latent.init({4 * base_ch, 4 * base_ch, Resample::none}, rng);
    dec.init(base_ch, rng, zero_out_conv);
}

template <typename T>
TensorT<T> SrgTail<T>::forward(const TensorT<T>& x) {
    return dec.forward(latent.forward(x));
}

template <typename T>
TensorT<T> SrgTail<T>::backward(const TensorT<T>& gy) {
    return latent.backward(dec.backward(gy));
}

template <typename T>
void SrgTail<T>::collect(ParamList<T>& out, const std::string& prefix) {
    latent.collect(out, prefix + ".latent");
    dec.collect(out, prefix);
}

// -------------------------------------------------------------------- Srg --

template <typename T>
void Srg<T>::init(const SrgSpec& s, Rng& rng) {
    s.validate();
    spec = s;
    enc.init(s.base_ch, rng);
    // with the global skip the zeroed output conv makes the initial SR equal
    // the bicubic input, so training starts from the baseline
    tail.init(s.base_ch, rng, s.global_skip);
}

template <typename T>
TensorT<T> Srg<T>::forward(const TensorT<T>& x) {
    if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != spec.hr_size || x.dim(3) != spec.hr_size)
        throw InvalidArgument("srg: expected [N,3," + std::to_string(spec.hr_size) + "," +
                              std::to_string(spec.hr_size) + "], got " + x.shape_str());
    TensorT<T> y = tail.forward(enc.forward(x));
    if (spec.global_skip) ew_add_inplace(y, x);
    return y;
}

template <typename T>
TensorT<T> Srg<T>::backward(const TensorT<T>& gy) {
    TensorT<T> g = enc.backward(tail.backward(gy));
    if (spec.global_skip) ew_add_inplace(g, gy);
    return g;
}

template <typename T>
ParamList<T> Srg<T>::params() {
    ParamList<T> list;
    enc.collect(list, "enc");
    tail.collect(list, "tail");
    return list;
}

template <typename T>
ParamList<T> Srg<T>::encoder_params() {
    ParamList<T> list;
    enc.collect(list, "enc");
    return list;
}

template <typename T>
ParamList<T> Srg<T>::tail_params() {
    ParamList<T> list;
    tail.collect(list, "tail");
    return list;
}

// -------------------------------------------------------------- Regressor --

void RegressorSpec::validate() const {
    if (input_size < 32) throw InvalidArgument("regressor input_size must be >= 32");
    if (k < 1) throw InvalidArgument("regressor k must be >= 1");
    for (int c : conv_ch)
        if (c < 1) throw InvalidArgument("regressor conv channels must be positive");
}

std::array<int, 2> RegressorSpec::pool1_geometry() const {
    int o1 = (input_size + 2 * 2 - 11) / 4 + 1;
    int target = std::max(3, int(std::lround(27.0 * input_size / 128.0)));
    if (o1 <= target) return {1, 1};
    int stride = std::max(1, o1 / target);
    int ksize = o1 - stride * (target - 1);
    return {ksize, stride};
}

template <typename T>
void Regressor<T>::init(const RegressorSpec& s, Rng& rng) {
    s.validate();
    spec = s;
    const double g = std::sqrt(2.0);
    c1.init(3, s.conv_ch[0], 11, 4, 2, rng, g);
    auto [pk, ps] = s.pool1_geometry();
    p1.ksize = pk;
    p1.stride = ps;
    c2.init(s.conv_ch[0], s.conv_ch[1], 5, 1, 2, rng, g);
    p2.ksize = 3;
    p2.stride = 2;
    c3.init(s.conv_ch[1], s.conv_ch[2], 3, 1, 1, rng, g);
    c4.init(s.conv_ch[2], s.conv_ch[3], 3, 1, 1, rng, g);
    c5.init(s.conv_ch[3], s.conv_ch[4], 3, 1, 1, rng, g);
    p5.ksize = 3;
    p5.stride = 2;

    // trace spatial sizes to size fc1
    int side = (s.input_size + 2 * 2 - 11) / 4 + 1;
    side = (side - p1.ksize) / p1.stride + 1;
    side = (side - 3) / 2 + 1;
    side = (side - 3) / 2 + 1;
    if (side < 1) throw InvalidArgument("regressor input too small for the conv stack");
    int flat = s.conv_ch[4] * side * side;
    fc1.init(flat, s.fc_dim[0], rng, g);
    fc2.init(s.fc_dim[0], s.fc_dim[1], rng, g);
    fc3.init(s.fc_dim[1], s.k, rng, 1.0);
}

template <typename T>
TensorT<T> Regressor<T>::forward(const TensorT<T>& x) {
    if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != spec.input_size ||
        x.dim(3) != spec.input_size)
        throw InvalidArgument("regressor: expected [N,3," + std::to_string(spec.input_size) +
                              "," + std::to_string(spec.input_size) + "], got " + x.shape_str());
    TensorT<T> h = r1.forward(c1.forward(x));
    h = p1.forward(h);
    h = r2.forward(c2.forward(h));
    h = p2.forward(h);
    h = r3.forward(c3.forward(h));
    h = r4.forward(c4.forward(h));
    h = r5.forward(c5.forward(h));
    h = p5.forward(h);
    pre_flatten_shape_ = h.shape();
    TensorT<T> flat({h.dim(0), int(h.numel() / h.dim(0))});
    std::copy(h.data(), h.data() + h.numel(), flat.data());
    TensorT<T> f = rf1.forward(fc1.forward(flat));
    f = rf2.forward(fc2.forward(f));
    f = fc3.forward(f);
    return softmax.forward(f);
}

template <typename T>
TensorT<T> Regressor<T>::backward(const TensorT<T>& gprobs) {
    TensorT<T> g = softmax.backward(gprobs);
    g = fc3.backward(g);
    g = rf2.backward(g);
    g = fc2.backward(g);
    g = rf1.backward(g);
    g = fc1.backward(g);
    TensorT<T> gh(pre_flatten_shape_);
    std::copy(g.data(), g.data() + g.numel(), gh.data());
    gh = p5.backward(gh);
    gh = c5.backward(r5.backward(gh));
    gh = c4.backward(r4.backward(gh));
    gh = c3.backward(r3.backward(gh));
    gh = p2.backward(gh);
    gh = c2.backward(r2.backward(gh));
    gh = p1.backward(gh);
    return c1.backward(r1.backward(gh));
}

template <typename T>
ParamList<T> Regressor<T>::params() {
    ParamList<T> list;
    c1.collect(list, "conv1");
    c2.collect(list, "conv2");
    c3.collect(list, "conv3");
    c4.collect(list, "conv4");
    c5.collect(list, "conv5");
    fc1.collect(list, "fc1");
    fc2.collect(list, "fc2");
    fc3.collect(list, "fc3");
    return list;
}

// ----------------------------------------------------------------- UfvNet --

Variant parse_variant(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "nw") return Variant::nw;
    if (s == "fm") return Variant::fm;
    throw InvalidArgument("unknown variant '" + s + "' (expected full|nw|fm)");
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::nw: return "nw";
        case Variant::fm: return "fm";
    }
    return "?";
}

std::string ufv_tag_for_k(Variant v, size_t k) {
    if (v == Variant::full) {
        if (k == 1) return "one_srg";
        if (k == 2) return "two_srg";
        if (k == 4) return "four_srg";
    }
    return variant_name(v);
}

std::string UfvSpec::tag() const { return ufv_tag_for_k(variant, anchors.size()); }

void UfvSpec::validate() const {
    SrgSpec{hr_size, base_ch, global_skip}.validate();
    if (anchors.empty()) throw InvalidArgument("ufvnet needs at least one anchor");
    double prev = 0.0;
    for (const Fraction& a : anchors) {
        if (a.value() <= prev) throw InvalidArgument("anchors must be strictly increasing");
        prev = a.value();
    }
    if (has_regressor()) {
        RegressorSpec r = regressor;
        r.input_size = hr_size;
        r.k = int(anchors.size());
        r.validate();
    }
}

template <typename T>
void UfvNet<T>::init(const UfvSpec& s, Rng& rng, bool attach_tails) {
    s.validate();
    spec = s;
    const int c = s.base_ch;
    const int k = s.k();
    branches.resize(size_t(k));
    for (int i = 0; i < k; ++i) branches[size_t(i)].init(c, rng);
    if (s.has_regressor()) {
        RegressorSpec rs = s.regressor;
        rs.input_size = s.hr_size;
        rs.k = k;
        regressor.emplace();
        regressor->init(rs, rng);
    }
    fusion.init({k * 4 * c, 4 * c, Resample::none}, rng);
    decoder.init(c, rng, s.global_skip);
    if (attach_tails) {
        branch_tails.resize(size_t(k));
        for (int i = 0; i < k; ++i) branch_tails[size_t(i)].init(c, rng, s.global_skip);
    }
}

template <typename T>
UfvForwardResult<T> UfvNet<T>::forward(const TensorT<T>& x, const std::vector<double>& rates,
                                       bool compute_branch_sr) {
    const int n = x.dim(0);
    const int k = spec.k();
    if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != spec.hr_size || x.dim(3) != spec.hr_size)
        throw InvalidArgument("ufvnet: expected [N,3," + std::to_string(spec.hr_size) + "," +
                              std::to_string(spec.hr_size) + "], got " + x.shape_str());
    x_cache_ = x;

    // branch weights
    TensorT<T> w({n, k});
    if (weight_override) {
        if (weight_override->dim(0) != n || weight_override->dim(1) != k)
            throw InvalidArgument("weight override has shape " + weight_override->shape_str() +
                                  ", expected [" + std::to_string(n) + "," + std::to_string(k) +
                                  "]");
        w = *weight_override;
    } else if (spec.has_regressor()) {
        w = regressor->forward(x);
    } else if (spec.variant == Variant::nw || k == 1) {
        w.fill(T(1));
    } else if (spec.variant == Variant::fm) {
        if (int(rates.size()) != n)
            throw InvalidArgument(
                "variant fm needs one known down-sampling rate per sample (got " +
                std::to_string(rates.size()) + " for batch of " + std::to_string(n) + ")");
        std::vector<double> av(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) av[size_t(i)] = spec.anchors[size_t(i)].value();
        for (int i = 0; i < n; ++i) {
            auto wi = compute_anchor_weights(rates[size_t(i)], av);
            for (int j = 0; j < k; ++j) w.at(i, j) = T(wi[size_t(j)]);
        }
    } else {
        throw InvalidArgument("variant/mode mismatch: no weight source available");
    }
    weights_cache_ = w;

    // encoders, scaled per branch, concatenated along channels
    enc_cache_.resize(size_t(k));
    const int c4 = 4 * spec.base_ch;
    const int fh = spec.hr_size / 8, fw = spec.hr_size / 8;
    TensorT<T> cat({n, k * c4, fh, fw});
    for (int i = 0; i < k; ++i) {
        enc_cache_[size_t(i)] = branches[size_t(i)].forward(x);
        const TensorT<T>& e = enc_cache_[size_t(i)];
        for (int b = 0; b < n; ++b) {
            T wi = w.at(b, i);
            const T* src = e.data() + size_t(b) * c4 * fh * fw;
            T* dst = cat.data() + (size_t(b) * k * c4 + size_t(i) * c4) * fh * fw;
            for (int64_t j = 0; j < int64_t(c4) * fh * fw; ++j) dst[j] = src[j] * wi;
        }
    }

    TensorT<T> fused = fusion.forward(cat);
    TensorT<T> sr = decoder.forward(fused);
    if (spec.global_skip) ew_add_inplace(sr, x);

    UfvForwardResult<T> res;
    res.sr = std::move(sr);
    res.weights = w;
    if (compute_branch_sr && !branch_tails.empty()) {
        res.branch_sr.resize(size_t(k));
        for (int i = 0; i < k; ++i) {
            TensorT<T> bsr = branch_tails[size_t(i)].forward(enc_cache_[size_t(i)]);
            if (spec.global_skip) ew_add_inplace(bsr, x);
            res.branch_sr[size_t(i)] = std::move(bsr);
        }
    }
    return res;
}

template <typename T>
void UfvNet<T>::backward(const TensorT<T>& gsr, const TensorT<T>& gweights) {
    const int n = x_cache_.dim(0);
    const int k = spec.k();
    const int c4 = 4 * spec.base_ch;
    const int fh = spec.hr_size / 8, fw = spec.hr_size / 8;

    TensorT<T> gcat = fusion.backward(decoder.backward(gsr));

    TensorT<T> gw({n, k});
    for (int i = 0; i < k; ++i) {
        const TensorT<T>& e = enc_cache_[size_t(i)];
        TensorT<T> ge({n, c4, fh, fw});
        for (int b = 0; b < n; ++b) {
            T wi = weights_cache_.at(b, i);
            const T* gsrc = gcat.data() + (size_t(b) * k * c4 + size_t(i) * c4) * fh * fw;
            const T* esrc = e.data() + size_t(b) * c4 * fh * fw;
            T* gdst = ge.data() + size_t(b) * c4 * fh * fw;
            double dot = 0.0;
            for (int64_t j = 0; j < int64_t(c4) * fh * fw; ++j) {
                gdst[j] = gsrc[j] * wi;
                dot += double(gsrc[j]) * double(esrc[j]);
            }
            gw.at(b, i) = T(dot);
        }
        branches[size_t(i)].backward(ge);
    }

    if (spec.has_regressor() && !weight_override) {
        // weight gradient arrives from both the SR path (scaling) and the
        // weight loss; combine before the shared softmax
        if (!gweights.empty()) {
            check_same_shape(gw, gweights, "ufvnet weight grads");
            ew_add_inplace(gw, gweights);
        }
        regressor->backward(gw);
    }
}

template <typename T>
ParamList<T> UfvNet<T>::params() {
    ParamList<T> list;
    for (size_t i = 0; i < branches.size(); ++i)
        branches[i].collect(list, "branch" + std::to_string(i + 1) + ".enc");
    if (regressor) {
        ParamList<T> rp = regressor->params();
        for (auto& p : rp) list.push_back({"regressor." + p.name, p.value, p.grad});
    }
    fusion.collect(list, "fusion");
    decoder.collect(list, "decoder");
    return list;
}

template <typename T>
ParamList<T> UfvNet<T>::params_with_tails() {
    ParamList<T> list = params();
    for (size_t i = 0; i < branch_tails.size(); ++i)
        branch_tails[i].collect(list, "branch" + std::to_string(i + 1) + ".tail");
    return list;
}

template <typename T>
void copy_params(const ParamList<T>& src, ParamList<T>& dst) {
    if (src.size() != dst.size())
        throw RuntimeFailure("parameter list size mismatch: " + std::to_string(src.size()) +
                             " vs " + std::to_string(dst.size()));
    for (size_t i = 0; i < src.size(); ++i) {
        if (!src[i].value->same_shape(*dst[i].value))
            throw RuntimeFailure("parameter shape mismatch at " + dst[i].name + ": " +
                                 src[i].value->shape_str() + " vs " + dst[i].value->shape_str());
        *dst[i].value = *src[i].value;
    }
}

#define UFV_MODEL_INSTANTIATE(T)       \
    template struct Encoder<T>;        \
    template struct Decoder<T>;        \
    template struct SrgTail<T>;        \
    template struct Srg<T>;            \
    template struct Regressor<T>;      \
    template struct UfvNet<T>;         \
    template void copy_params<T>(const ParamList<T>&, ParamList<T>&);

UFV_MODEL_INSTANTIATE(float)
UFV_MODEL_INSTANTIATE(double)

}  // namespace ufv
