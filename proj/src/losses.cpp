#include "losses.hpp"

#include <cmath>

namespace ufv {

namespace {

constexpr double kProbFloor = 1e-12;

template <typename T>
void validate_prob_rows(const TensorT<T>& p, const char* what) {
    if (p.rank() != 2) throw InvalidArgument(std::string(what) + ": expected [N,k] probabilities");
    const int n = p.dim(0), k = p.dim(1);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            double v = double(p[size_t(i) * k + j]);
            if (v < -1e-7)
                throw InvalidArgument(std::string(what) + ": negative probability component");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-4)
            throw InvalidArgument(std::string(what) + ": row " + std::to_string(i) +
                                  " not normalized (sum=" + std::to_string(sum) + ")");
    }
}

}  // namespace

template <typename T>
double l1_loss(const TensorT<T>& pred, const TensorT<T>& target) {
    check_same_shape(pred, target, "l1_loss");
    double acc = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i)
        acc += std::fabs(double(pred[i]) - double(target[i]));
    return acc / double(pred.numel());
}

template <typename T>
TensorT<T> l1_loss_grad(const TensorT<T>& pred, const TensorT<T>& target) {
    check_same_shape(pred, target, "l1_loss_grad");
    TensorT<T> g(pred.shape());
    T inv = T(1.0 / double(pred.numel()));
    for (int64_t i = 0; i < pred.numel(); ++i) {
        T d = pred[i] - target[i];
        g[i] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
    }
    return g;
}

template <typename T>
double soft_cross_entropy(const TensorT<T>& pred, const TensorT<T>& gt) {
    check_same_shape(pred, gt, "soft_cross_entropy");
    validate_prob_rows(pred, "soft_cross_entropy pred");
    validate_prob_rows(gt, "soft_cross_entropy gt");
    const int n = pred.dim(0), k = pred.dim(1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            double t = double(gt[size_t(i) * k + j]);
            if (t == 0.0) continue;
            acc -= t * std::log(std::max(double(pred[size_t(i) * k + j]), kProbFloor));
        }
    return acc / double(n);
}

template <typename T>
TensorT<T> soft_cross_entropy_grad(const TensorT<T>& pred, const TensorT<T>& gt) {
    check_same_shape(pred, gt, "soft_cross_entropy_grad");
    const int n = pred.dim(0), k = pred.dim(1);
    TensorT<T> g(pred.shape());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            double p = double(pred[size_t(i) * k + j]);
            double t = double(gt[size_t(i) * k + j]);
            g[size_t(i) * k + j] = p > kProbFloor ? T(-t / p / double(n)) : T(0);
        }
    return g;
}

double total_loss(double sr_loss, double wt_loss, double alpha) {
    if (!std::isfinite(sr_loss) || !std::isfinite(wt_loss))
        throw RuntimeFailure("non-finite loss component");
    return sr_loss + alpha * wt_loss;
}

double entropy_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

#define UFV_LOSS_INSTANTIATE(T)                                                   \
    template double l1_loss<T>(const TensorT<T>&, const TensorT<T>&);             \
    template TensorT<T> l1_loss_grad<T>(const TensorT<T>&, const TensorT<T>&);    \
    template double soft_cross_entropy<T>(const TensorT<T>&, const TensorT<T>&);  \
    template TensorT<T> soft_cross_entropy_grad<T>(const TensorT<T>&, const TensorT<T>&);

UFV_LOSS_INSTANTIATE(float)
UFV_LOSS_INSTANTIATE(double)

}  // namespace ufv
