#pragma once

#include <cstdint>
#include <cmath>

namespace ufv {

// Deterministic splitmix64-based generator. Self-contained so that seeded
// streams are identical across standard library versions.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // in [0, 1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // in [0, n)
    uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

    // standard normal via Box-Muller (one value per call, cached pair)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // derive an independent stream (for per-image / per-module seeding)
    Rng fork(uint64_t salt) {
        Rng r(state_ ^ (0xd1342543de82ef95ULL * (salt + 1)));
        r.next_u64();
        return r;
    }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Fisher-Yates with our own generator so shuffles are portable.
template <typename T, typename Vec>
void shuffle_vec(Vec& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace ufv
