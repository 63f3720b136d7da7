#include "gradcheck.hpp"

#include <cmath>

namespace ufv {

GradCheckReport finite_diff_gradcheck(ParamList<double>& params,
                                      const std::function<double()>& loss,
                                      const std::function<void()>& backprop,
                                      double step) {
    zero_grads(params);
    backprop();

    // snapshot analytic gradients before perturbing anything
    std::vector<std::vector<double>> analytic(params.size());
    for (size_t pi = 0; pi < params.size(); ++pi) {
        const TensorT<double>& g = *params[pi].grad;
        analytic[pi].assign(g.data(), g.data() + g.numel());
    }

    GradCheckReport rep;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        TensorT<double>& w = *params[pi].value;
        for (int64_t i = 0; i < w.numel(); ++i) {
            double saved = w[i];
            w[i] = saved + step;
            double lp = loss();
            w[i] = saved - step;
            double lm = loss();
            w[i] = saved;
            double fd = (lp - lm) / (2.0 * step);
            double a = analytic[pi][size_t(i)];
            double abs_err = std::fabs(a - fd);
            double rel = abs_err / std::max({std::fabs(a), std::fabs(fd), 1e-6});
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_param = params[pi].name + "[" + std::to_string(i) + "]";
            }
            rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
            ++rep.n_checked;
        }
    }
    return rep;
}

}  // namespace ufv
