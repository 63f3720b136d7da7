#pragma once

#include "anchors.hpp"
#include "fau.hpp"

#include <array>
#include <optional>

namespace ufv {

// ---------------------------------------------------------------------------
// Channel plan (base width C): stem conv 3->C, encoder C->2C->4C->4C with
// stride-2 steps, one latent unit at 4C, decoder mirrored back to C with
// nearest-up steps, output conv C->3. An SR generator is encoder + latent +
// decoder (seven attention units plus the stem/output convs). The fused
// network keeps k encoders and feeds the weighted channel concatenation
// through a fusion unit into a fresh decoder; branch latents and decoders do
// not exist in the deployable graph.
// ---------------------------------------------------------------------------

struct SrgSpec {
    int hr_size = 128;
    int base_ch = 32;
    bool global_skip = true;

    void validate() const;
};

template <typename T>
struct Encoder {
    Conv2d<T> stem;          // 3 -> C
    Fau<T> f1, f2, f3;       // C->2C d2, 2C->4C d2, 4C->4C d2

    void init(int base_ch, Rng& rng);
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    void collect(ParamList<T>& out, const std::string& prefix);
};

template <typename T>
struct Decoder {
    Fau<T> d1, d2, d3;       // 4C->4C u2, 4C->2C u2, 2C->C u2
    Conv2d<T> out;           // C -> 3

    void init(int base_ch, Rng& rng, bool zero_out_conv);
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    void collect(ParamList<T>& out_list, const std::string& prefix);
};

// branch-local latent unit + decoder (the part discarded after stage 1)
template <typename T>
struct SrgTail {
    Fau<T> latent;           // 4C -> 4C
    Decoder<T> dec;

    void init(int base_ch, Rng& rng, bool zero_out_conv);
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    void collect(ParamList<T>& out, const std::string& prefix);
};

// Stand-alone anchor SR generator: seven attention units end to end. Input is
// the bicubic-upscaled image I_LS at hr_size; output is the same size, raw
// (clamp to [0,1] at inference time only).
template <typename T>
struct Srg {
    SrgSpec spec;
    Encoder<T> enc;
    SrgTail<T> tail;

    void init(const SrgSpec& s, Rng& rng);
    TensorT<T> forward(const TensorT<T>& x);
    TensorT<T> backward(const TensorT<T>& gy);
    ParamList<T> params();
    ParamList<T> encoder_params();
    ParamList<T> tail_params();
};

// ---------------------------------------------------------------------------

// Classifier-style stack: five conv stages with max-pooling after stages 1, 2
// and 5, then fully-connected layers and a k-way softmax. The first pooling
// stage is sized so the stage-1 map lands at round(27*H/128) for input H
// (27 being the canonical 224-input map scaled to H=128).
struct RegressorSpec {
    int input_size = 128;
    int k = 3;
    std::array<int, 5> conv_ch = {16, 32, 48, 48, 32};
    std::array<int, 2> fc_dim = {128, 64};

    void validate() const;
    std::array<int, 2> pool1_geometry() const;  // {ksize, stride}
};

template <typename T>
struct Regressor {
    RegressorSpec spec;
    Conv2d<T> c1, c2, c3, c4, c5;
    Relu<T> r1, r2, r3, r4, r5, rf1, rf2;
    MaxPool<T> p1, p2, p5;
    Linear<T> fc1, fc2, fc3;
    Softmax<T> softmax;

    void init(const RegressorSpec& s, Rng& rng);
    TensorT<T> forward(const TensorT<T>& x);        // [N,3,H,W] -> probs [N,k]
    TensorT<T> backward(const TensorT<T>& gprobs);  // grad wrt probabilities
    ParamList<T> params();

  private:
    std::vector<int> pre_flatten_shape_;
};

// ---------------------------------------------------------------------------

enum class Variant { full, nw, fm };

Variant parse_variant(const std::string& s);
const char* variant_name(Variant v);

struct UfvSpec {
    int hr_size = 128;
    int base_ch = 32;
    bool global_skip = true;
    Variant variant = Variant::full;
    std::vector<Fraction> anchors = {{1, 8}, {1, 4}, {1, 2}};
    RegressorSpec regressor;

    int k() const { return int(anchors.size()); }
    // k==1 never carries a regressor (a 1-way softmax is constant)
    bool has_regressor() const { return variant == Variant::full && anchors.size() >= 2; }
    // checkpoint tag: full/nw/fm, with one_srg/two_srg/four_srg for branch-count ablations
    std::string tag() const;
    void validate() const;
};

template <typename T>
struct UfvForwardResult {
    TensorT<T> sr;                     // [N,3,H,W], raw
    TensorT<T> weights;                // [N,k]
    std::vector<TensorT<T>> branch_sr; // only when tails are attached and requested
};

// The fused network. Holds k anchor encoders, the optional weight regressor,
// the fusion unit over the weighted concatenation and the final decoder.
// Optional per-branch tails materialize the complete training-time graph for
// inspection; they never feed the SR path.
template <typename T>
struct UfvNet {
    UfvSpec spec;
    std::vector<Encoder<T>> branches;
    std::optional<Regressor<T>> regressor;
    Fau<T> fusion;                 // k*4C -> 4C
    Decoder<T> decoder;
    std::vector<SrgTail<T>> branch_tails;  // empty unless attach_tails

    // Test hook: fixed [N,k] weights replacing the regressor/formula output
    // during forward (no regressor gradients flow while set).
    std::optional<TensorT<T>> weight_override;

    void init(const UfvSpec& s, Rng& rng, bool attach_tails = false);

    // x is I_LS [N,3,H,W]. rates must be supplied for variant fm.
    UfvForwardResult<T> forward(const TensorT<T>& x, const std::vector<double>& rates = {},
                                bool compute_branch_sr = false);
    // gsr: grad wrt raw SR output; gweights: grad wrt the weight vector coming
    // from the weight loss (empty tensor when absent). Branch weights also pick
    // up gradient from the SR path through the per-branch scaling.
    void backward(const TensorT<T>& gsr, const TensorT<T>& gweights);

    ParamList<T> params();                  // retained (deployable) graph only
    ParamList<T> params_with_tails();       // adds branch tails (training-graph surgery)

  private:
    TensorT<T> x_cache_;
    TensorT<T> weights_cache_;
    std::vector<TensorT<T>> enc_cache_;
};

// parameter plumbing shared by training / checkpoint code
template <typename T>
void copy_params(const ParamList<T>& src, ParamList<T>& dst);

std::string ufv_tag_for_k(Variant v, size_t k);

}  // namespace ufv
