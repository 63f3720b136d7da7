#pragma once

#include "common.hpp"

#include <array>
#include <cstdint>
#include <new>
#include <string>
#include <vector>

namespace ufv {

// 64-byte alignment for every numeric buffer: SIMD kernels then peel/split
// identically on every run, keeping results bit-reproducible (heap addresses
// otherwise vary run to run and change vectorized reduction order).
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
    }
    void deallocate(T* p, size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
};

template <typename T>
using AlignedVec = std::vector<T, AlignedAllocator<T>>;

// Dense row-major tensor of rank 1..4. Shapes use the NCHW convention for
// feature maps. Float is the production scalar; double instantiations exist
// for finite-difference gradient verification.
template <typename T>
class TensorT {
  public:
    TensorT() = default;
    explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
        v_.assign(size_t(numel_of(shape_)), T(0));
    }

    static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

    static TensorT full(std::vector<int> shape, T value) {
        TensorT t(std::move(shape));
        std::fill(t.v_.begin(), t.v_.end(), value);
        return t;
    }

    static int64_t numel_of(const std::vector<int>& shape) {
        if (shape.empty()) return 0;
        int64_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw InvalidArgument("tensor dims must be positive");
            n *= d;
        }
        return n;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return int(shape_.size()); }
    int dim(int i) const { return shape_[size_t(i)]; }
    int64_t numel() const { return int64_t(v_.size()); }
    bool empty() const { return v_.empty(); }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }

    T& operator[](int64_t i) { return v_[size_t(i)]; }
    const T& operator[](int64_t i) const { return v_[size_t(i)]; }

    // NCHW accessors
    T& at(int n, int c, int y, int x) {
        return v_[size_t(((int64_t(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x)];
    }
    const T& at(int n, int c, int y, int x) const {
        return v_[size_t(((int64_t(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x)];
    }
    T& at(int n, int c) { return v_[size_t(int64_t(n) * shape_[1] + c)]; }
    const T& at(int n, int c) const { return v_[size_t(int64_t(n) * shape_[1] + c)]; }

    void fill(T value) { std::fill(v_.begin(), v_.end(), value); }
    void zero() { fill(T(0)); }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape_);
        for (int64_t i = 0; i < numel(); ++i) out[i] = U(v_[size_t(i)]);
        return out;
    }

  private:
    template <typename U> friend class TensorT;
    std::vector<int> shape_;
    AlignedVec<T> v_;
};

using Tensor = TensorT<float>;

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* where) {
    if (!a.same_shape(b))
        throw InvalidArgument(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " +
                              b.shape_str());
}

}  // namespace ufv
