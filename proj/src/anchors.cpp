#include "anchors.hpp"

#include <cmath>

namespace ufv {

Fraction parse_fraction(const std::string& s) {
    size_t slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            // allow whole numbers ("1" == 1/1)
            return Fraction(std::stoi(s), 1);
        }
        int num = std::stoi(s.substr(0, slash));
        int den = std::stoi(s.substr(slash + 1));
        return Fraction(num, den);
    } catch (const std::logic_error&) {
        throw InvalidArgument("bad rate fraction: '" + s + "'");
    }
}

void AnchorConfig::validate() const {
    if (hr_size < 2) throw InvalidArgument("hr_size must be >= 2");
    if (anchors.empty()) throw InvalidArgument("anchor list is empty");
    double prev = 0.0;
    for (const Fraction& a : anchors) {
        double v = a.value();
        if (v <= prev) throw InvalidArgument("anchors must be strictly increasing");
        if (v > 1.0) throw InvalidArgument("anchor rate " + a.str() + " exceeds 1");
        prev = v;
        lr_side(a);
    }
    for (const Fraction& r : rate_set) {
        if (r.value() > 1.0) throw InvalidArgument("rate " + r.str() + " exceeds 1");
        lr_side(r);
    }
}

int AnchorConfig::lr_side(const Fraction& rate) const {
    int64_t scaled = int64_t(hr_size) * rate.num;
    if (scaled % rate.den != 0)
        throw InvalidArgument("rate " + rate.str() + " times hr_size " + std::to_string(hr_size) +
                              " is not an integer");
    int64_t side = scaled / rate.den;
    if (side < 2)
        throw InvalidArgument("rate " + rate.str() + " gives LR side < 2 at hr_size " +
                              std::to_string(hr_size));
    return int(side);
}

std::vector<Fraction> rate_preset(const std::string& name) {
    if (name == "mr3") return {{2, 16}, {4, 16}, {8, 16}};
    if (name == "mr7") {
        std::vector<Fraction> v;
        for (int n = 2; n <= 8; ++n) v.emplace_back(n, 16);
        return v;
    }
    if (name == "mr8") {
        std::vector<Fraction> v;
        for (int n = 1; n <= 8; ++n) v.emplace_back(n, 16);
        return v;
    }
    throw InvalidArgument("unknown rate preset: '" + name + "' (expected mr3|mr7|mr8)");
}

std::vector<double> compute_anchor_weights(double rate, const std::vector<double>& anchors) {
    if (!(rate > 0.0) || rate > 1.0) throw InvalidArgument("rate must be in (0,1]");
    size_t k = anchors.size();
    if (k == 0) throw InvalidArgument("no anchors");
    if (k == 1) return {1.0};

    std::vector<double> d(k);
    double sum = 0.0;
    for (size_t i = 0; i < k; ++i) {
        d[i] = std::fabs(rate - anchors[i]);
        sum += d[i];
    }
    if (sum <= 0.0)
        throw InvalidArgument("degenerate anchor config: all anchors coincide with rate");

    std::vector<double> w(k);
    double pre = 1.0 / double(k - 1);
    for (size_t i = 0; i < k; ++i) w[i] = pre * (1.0 - d[i] / sum);
    return w;
}

std::vector<double> compute_anchor_weights(const Fraction& rate,
                                           const std::vector<Fraction>& anchors) {
    std::vector<double> a(anchors.size());
    for (size_t i = 0; i < anchors.size(); ++i) a[i] = anchors[i].value();
    return compute_anchor_weights(rate.value(), a);
}

}  // namespace ufv
