#pragma once

#include "common.hpp"

#include <numeric>
#include <string>
#include <vector>

namespace ufv {

// Exact rational down-sampling rate. Manifests store rates as "n/d" text so
// repeated parsing never drifts; presets keep the /16 denominator unreduced.
struct Fraction {
    int num = 0;
    int den = 1;

    Fraction() = default;
    Fraction(int n, int d) : num(n), den(d) {
        if (d <= 0 || n <= 0) throw InvalidArgument("rate fraction must be positive");
    }

    double value() const { return double(num) / double(den); }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

    Fraction reduced() const {
        int g = std::gcd(num, den);
        return Fraction(num / g, den / g);
    }
    bool same_value(const Fraction& o) const {
        return int64_t(num) * o.den == int64_t(o.num) * den;
    }
    bool operator==(const Fraction& o) const { return num == o.num && den == o.den; }
};

Fraction parse_fraction(const std::string& s);

// Anchor set plus the rate set used for dataset generation.
struct AnchorConfig {
    int hr_size = 128;
    std::vector<Fraction> anchors = {{1, 8}, {1, 4}, {1, 2}};
    std::vector<Fraction> rate_set;  // e.g. MR8 = {1/16 .. 8/16}

    void validate() const;
    int lr_side(const Fraction& rate) const;  // rate*hr_size, checked integral and >= 2
};

// mr3 / mr7 / mr8 rate presets
std::vector<Fraction> rate_preset(const std::string& name);

// Soft class score for a sample at `rate` against k anchors:
//   d_i = |r - a_i|,  w_i = (1/(k-1)) * (1 - d_i / sum(d))
// which is the three-anchor formula 1/2*(1 - d_i/sum d) generalized so any
// k >= 2 sums to 1. k == 1 returns {1}. All components are >= 0 and closer
// anchors get strictly larger weights.
std::vector<double> compute_anchor_weights(double rate, const std::vector<double>& anchors);
std::vector<double> compute_anchor_weights(const Fraction& rate,
                                           const std::vector<Fraction>& anchors);

}  // namespace ufv
