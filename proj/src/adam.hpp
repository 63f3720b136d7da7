#pragma once

#include "nn.hpp"

namespace ufv {

// Adam with bias correction, fixed learning rate, no weight decay. State is
// keyed by position in the parameter list, which must stay stable between
// steps.
template <typename T>
class Adam {
  public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamList<T>& params);
    int64_t steps_taken() const { return t_; }

  private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<TensorT<T>> m_, v_;
};

}  // namespace ufv
