#pragma once

#include "nn.hpp"

#include <functional>

namespace ufv {

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    int64_t n_checked = 0;
    std::string worst_param;

    bool pass(double tol) const { return n_checked > 0 && max_rel_err < tol; }
};

// Central finite differences against the analytic gradients of a scalar loss.
// `loss` runs a full forward pass over a fixed input and returns the loss;
// `backprop` runs forward + backward, leaving gradients in `params` (grads are
// zeroed here first). Meant for miniature double-precision modules.
GradCheckReport finite_diff_gradcheck(ParamList<double>& params,
                                      const std::function<double()>& loss,
                                      const std::function<void()>& backprop,
                                      double step = 1e-5);

}  // namespace ufv
