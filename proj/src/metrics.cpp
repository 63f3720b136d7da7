#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ufv {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01, kK2 = 0.03;

std::vector<double> to_luma(const Image& img) {
    std::vector<double> y(size_t(img.h) * img.w);
    for (int i = 0; i < img.h; ++i)
        for (int j = 0; j < img.w; ++j) {
            if (img.c == 3)
                y[size_t(i) * img.w + j] = 0.299 * img.at(i, j, 0) + 0.587 * img.at(i, j, 1) +
                                           0.114 * img.at(i, j, 2);
            else
                y[size_t(i) * img.w + j] = img.at(i, j, 0);
        }
    return y;
}

std::vector<double> channel_of(const Image& img, int ch) {
    std::vector<double> v(size_t(img.h) * img.w);
    for (int i = 0; i < img.h; ++i)
        for (int j = 0; j < img.w; ++j) v[size_t(i) * img.w + j] = img.at(i, j, ch);
    return v;
}

const std::vector<double>& gaussian_taps() {
    static const std::vector<double> taps = [] {
        std::vector<double> t(kWin);
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - (kWin - 1) / 2.0;
            t[size_t(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += t[size_t(i)];
        }
        for (double& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// valid-mode separable gaussian filter
std::vector<double> gauss_valid(const std::vector<double>& src, int h, int w, int& oh, int& ow) {
    const auto& taps = gaussian_taps();
    ow = w - kWin + 1;
    oh = h - kWin + 1;
    std::vector<double> mid(size_t(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWin; ++k) acc += taps[size_t(k)] * src[size_t(y) * w + x + k];
            mid[size_t(y) * ow + x] = acc;
        }
    std::vector<double> out(size_t(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWin; ++k) acc += taps[size_t(k)] * mid[size_t(y + k) * ow + x];
            out[size_t(y) * ow + x] = acc;
        }
    return out;
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
    const double c1 = kK1 * kK1, c2 = kK2 * kK2;
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    int oh = 0, ow = 0;
    auto mu_a = gauss_valid(a, h, w, oh, ow);
    auto mu_b = gauss_valid(b, h, w, oh, ow);
    auto m_aa = gauss_valid(aa, h, w, oh, ow);
    auto m_bb = gauss_valid(bb, h, w, oh, ow);
    auto m_ab = gauss_valid(ab, h, w, oh, ow);
    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        double ma = mu_a[i], mb = mu_b[i];
        double va = m_aa[i] - ma * ma;
        double vb = m_bb[i] - mb * mb;
        double cov = m_ab[i] - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return acc / double(mu_a.size());
}

}  // namespace

MetricMode parse_metric_mode(const std::string& s) {
    if (s == "rgb") return MetricMode::rgb;
    if (s == "y601") return MetricMode::y601;
    throw InvalidArgument("unknown metric mode '" + s + "' (expected rgb|y601)");
}

double psnr(const Image& a, const Image& b, MetricMode mode) {
    if (a.h != b.h || a.w != b.w || a.c != b.c)
        throw InvalidArgument("psnr: shape mismatch");
    double mse = 0.0;
    if (mode == MetricMode::y601 && a.c == 3) {
        auto ya = to_luma(a), yb = to_luma(b);
        for (size_t i = 0; i < ya.size(); ++i) {
            double d = ya[i] - yb[i];
            mse += d * d;
        }
        mse /= double(ya.size());
    } else {
        for (size_t i = 0; i < a.px.size(); ++i) {
            double d = double(a.px[i]) - double(b.px[i]);
            mse += d * d;
        }
        mse /= double(a.px.size());
    }
    return psnr_from_mse(mse);
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b, MetricMode mode) {
    if (a.h != b.h || a.w != b.w || a.c != b.c)
        throw InvalidArgument("ssim: shape mismatch");
    if (a.h < kWin || a.w < kWin)
        throw InvalidArgument("ssim: image smaller than the 11x11 window");
    if (mode == MetricMode::y601 && a.c == 3)
        return ssim_plane(to_luma(a), to_luma(b), a.h, a.w);
    double acc = 0.0;
    for (int ch = 0; ch < a.c; ++ch)
        acc += ssim_plane(channel_of(a, ch), channel_of(b, ch), a.h, a.w);
    return acc / double(a.c);
}

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void EvalReport::finalize() {
    aggregate = EvalRow{};
    aggregate.rate = "all";
    double psnr_acc = 0.0, ssim_acc = 0.0;
    int64_t psnr_n = 0, n_total = 0;
    for (const auto& row : per_rate) {
        aggregate.n += row.n;
        aggregate.n_inf += row.n_inf;
        n_total += row.n;
        ssim_acc += row.ssim * row.n;
        int finite = row.n - row.n_inf;
        if (finite > 0 && std::isfinite(row.psnr_db)) {
            psnr_acc += row.psnr_db * finite;
            psnr_n += finite;
        }
    }
    aggregate.psnr_db =
        psnr_n > 0 ? psnr_acc / double(psnr_n) : std::numeric_limits<double>::infinity();
    aggregate.ssim = n_total > 0 ? ssim_acc / double(n_total) : 0.0;
}

void EvalReport::check_consistency() const {
    EvalReport copy = *this;
    copy.finalize();
    bool psnr_ok = (std::isinf(aggregate.psnr_db) && std::isinf(copy.aggregate.psnr_db)) ||
                   std::fabs(aggregate.psnr_db - copy.aggregate.psnr_db) <= 1e-9;
    if (!psnr_ok || std::fabs(aggregate.ssim - copy.aggregate.ssim) > 1e-9 ||
        aggregate.n != copy.aggregate.n)
        throw RuntimeFailure("eval report aggregate does not match the weighted per-rate mean");
}

void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw RuntimeFailure("cannot write report: " + path);
    f << "method,dataset,rate,n,psnr_db,ssim\n";
    for (const auto& rep : reports) {
        for (const auto& row : rep.per_rate)
            f << rep.method << "," << rep.dataset << "," << row.rate << "," << row.n << ","
              << format_metric(row.psnr_db) << "," << format_metric(row.ssim) << "\n";
        f << rep.method << "," << rep.dataset << ",all," << rep.aggregate.n << ","
          << format_metric(rep.aggregate.psnr_db) << "," << format_metric(rep.aggregate.ssim)
          << "\n";
    }
}

std::vector<EvalReport> read_report_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw RuntimeFailure("cannot open report: " + path);
    std::string line;
    std::getline(f, line);  // header
    std::vector<EvalReport> reports;
    auto find_report = [&](const std::string& method, const std::string& dataset) -> EvalReport& {
        for (auto& r : reports)
            if (r.method == method && r.dataset == dataset) return r;
        reports.push_back(EvalReport{method, dataset, {}, {}});
        return reports.back();
    };
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string method, dataset, rate, n_str, psnr_str, ssim_str;
        std::getline(ss, method, ',');
        std::getline(ss, dataset, ',');
        std::getline(ss, rate, ',');
        std::getline(ss, n_str, ',');
        std::getline(ss, psnr_str, ',');
        std::getline(ss, ssim_str, ',');
        EvalRow row;
        row.rate = rate;
        row.n = std::stoi(n_str);
        row.psnr_db = psnr_str == "inf" ? std::numeric_limits<double>::infinity()
                                        : std::stod(psnr_str);
        row.ssim = std::stod(ssim_str);
        EvalReport& rep = find_report(method, dataset);
        if (rate == "all")
            rep.aggregate = row;
        else
            rep.per_rate.push_back(row);
    }
    return reports;
}

}  // namespace ufv
