#include "tensor.hpp"

namespace ufv {

template class TensorT<float>;
template class TensorT<double>;

}  // namespace ufv
