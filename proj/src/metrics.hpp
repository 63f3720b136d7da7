#pragma once

#include "image.hpp"

#include <optional>
#include <vector>

namespace ufv {

enum class MetricMode { rgb, y601 };

MetricMode parse_metric_mode(const std::string& s);

// 10*log10(1/MSE) for [0,1] images; +inf for identical inputs. rgb averages
// the MSE over all channels; y601 compares BT.601 luma.
double psnr(const Image& a, const Image& b, MetricMode mode = MetricMode::rgb);
double psnr_from_mse(double mse);

// Windowed structural similarity: 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1. Mean over valid window positions and channels.
double ssim(const Image& a, const Image& b, MetricMode mode = MetricMode::rgb);

std::string format_metric(double v);  // "inf" sentinel for infinities

struct EvalRow {
    std::string rate;  // "n/d" or "all"
    int n = 0;
    int n_inf = 0;       // inf-PSNR samples excluded from the mean
    double psnr_db = 0;  // +inf if no finite sample
    double ssim = 0;
};

struct EvalReport {
    std::string method;
    std::string dataset;
    std::vector<EvalRow> per_rate;
    EvalRow aggregate;

    // recomputes the aggregate from per-rate rows (sample-weighted; inf rows
    // excluded from the PSNR mean with their counts kept)
    void finalize();
    // asserts the weighted-mean identity to 1e-9
    void check_consistency() const;
};

// one "method,dataset,rate,n,psnr_db,ssim" line per row, aggregate last
void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path);
std::vector<EvalReport> read_report_csv(const std::string& path);

}  // namespace ufv
