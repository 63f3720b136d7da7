#pragma once

#include "tensor.hpp"

namespace ufv {

// Losses accumulate in double regardless of the parameter scalar type.

// mean absolute error over batch, channels and pixels
template <typename T>
double l1_loss(const TensorT<T>& pred, const TensorT<T>& target);
template <typename T>
TensorT<T> l1_loss_grad(const TensorT<T>& pred, const TensorT<T>& target);

// soft-label cross-entropy over probability rows [N,k]:
//   -(1/N) sum_n sum_i gt[n,i] * log(max(pred[n,i], 1e-12))
// Rows of both arguments must be valid probability vectors.
template <typename T>
double soft_cross_entropy(const TensorT<T>& pred, const TensorT<T>& gt);
template <typename T>
TensorT<T> soft_cross_entropy_grad(const TensorT<T>& pred, const TensorT<T>& gt);

double total_loss(double sr_loss, double wt_loss, double alpha);

// -sum p_i log p_i (the soft-CE lower bound)
double entropy_of(const std::vector<double>& p);

}  // namespace ufv
