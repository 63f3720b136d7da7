#include "adam.hpp"

#include <cmath>

namespace ufv {

template <typename T>
void Adam<T>::step(ParamList<T>& params) {
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (auto& p : params) {
            m_.emplace_back(p.value->shape());
            v_.emplace_back(p.value->shape());
        }
    }
    if (m_.size() != params.size())
        throw RuntimeFailure("adam: parameter list changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        TensorT<T>& w = *params[pi].value;
        const TensorT<T>& g = *params[pi].grad;
        TensorT<T>& m = m_[pi];
        TensorT<T>& v = v_[pi];
        for (int64_t i = 0; i < w.numel(); ++i) {
            double gi = double(g[i]);
            double mi = beta1_ * double(m[i]) + (1.0 - beta1_) * gi;
            double vi = beta2_ * double(v[i]) + (1.0 - beta2_) * gi * gi;
            m[i] = T(mi);
            v[i] = T(vi);
            double mhat = mi / bc1;
            double vhat = vi / bc2;
            w[i] = T(double(w[i]) - lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace ufv
