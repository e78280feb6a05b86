#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "thermforge/errors.hpp"
#include "thermforge/image.hpp"
#include "thermforge/radiometry.hpp"

namespace thermforge {

struct MetricReport {
    double rmse_c = 0.0;
    double r2 = 0.0;
    double psnr_db = 0.0; // +inf when MSE is zero
    double ssim = 0.0;
    double gradient_energy_ratio = 0.0; // candidate sharpness / reference sharpness
    std::size_t n_pixels = 0;
};

// RMSE in degC over the jointly valid mask.
inline double rmse_celsius(const TemperatureMap& a, const TemperatureMap& b) {
    if (a.width != b.width || a.height != b.height)
        throw InvariantError("rmse_celsius: dimension mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.celsius.size(); ++i) {
        if (!a.valid[i] || !b.valid[i]) continue;
        const double d = a.celsius[i] - b.celsius[i];
        sum += d * d;
        ++n;
    }
    if (n == 0) throw InvariantError("rmse_celsius: empty joint validity mask");
    return std::sqrt(sum / static_cast<double>(n));
}

// Coefficient of determination of predicted against the reference mean.
inline double r_squared(std::span<const double> predicted, std::span<const double> reference) {
    if (predicted.size() != reference.size() || predicted.empty())
        throw InvariantError("r_squared: lists must be equal non-empty lengths");
    double mean = 0.0;
    for (double r : reference) mean += r;
    mean /= static_cast<double>(reference.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double dr = reference[i] - mean;
        const double dp = reference[i] - predicted[i];
        ss_tot += dr * dr;
        ss_res += dp * dp;
    }
    if (!(ss_tot > 0.0)) throw InvariantError("r_squared: reference variance is zero");
    return 1.0 - ss_res / ss_tot;
}

inline double mse(const GrayImage& a, const GrayImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw InvariantError("mse: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

inline double psnr_from_mse(double mse_value, double peak) {
    if (!(peak > 0.0)) throw InvariantError("psnr: peak must be > 0");
    if (mse_value <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse_value);
}

inline double psnr(const GrayImage& a, const GrayImage& b, double peak) {
    return psnr_from_mse(mse(a, b), peak);
}

namespace detail {

// 11x11 Gaussian window, sigma 1.5, normalized to unit sum.
inline const std::array<double, 121>& ssim_window() {
    static const std::array<double, 121> w = [] {
        std::array<double, 121> out{};
        double sum = 0.0;
        for (int y = -5; y <= 5; ++y)
            for (int x = -5; x <= 5; ++x) {
                const double g = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
                out[static_cast<std::size_t>((y + 5) * 11 + (x + 5))] = g;
                sum += g;
            }
        for (double& v : out) v /= sum;
        return out;
    }();
    return w;
}

} // namespace detail

// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03.
// Windows must lie fully inside the image; when a validity mask is given,
// windows containing any invalid pixel are skipped.
inline double ssim(const GrayImage& a, const GrayImage& b, double dynamic_range,
                   const std::vector<std::uint8_t>* valid_mask = nullptr) {
    if (a.width != b.width || a.height != b.height)
        throw InvariantError("ssim: dimension mismatch");
    if (a.width < 11 || a.height < 11)
        throw InvariantError("ssim: images must be at least 11x11");
    if (!(dynamic_range > 0.0)) throw InvariantError("ssim: dynamic range must be > 0");
    if (valid_mask && valid_mask->size() != a.size())
        throw InvariantError("ssim: mask size mismatch");

    const auto& w = detail::ssim_window();
    const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);

    double total = 0.0;
    std::size_t n_windows = 0;
    for (int cy = 5; cy < a.height - 5; ++cy) {
        for (int cx = 5; cx < a.width - 5; ++cx) {
            if (valid_mask) {
                bool ok = true;
                for (int dy = -5; ok && dy <= 5; ++dy)
                    for (int dx = -5; dx <= 5; ++dx)
                        if (!(*valid_mask)[static_cast<std::size_t>(cy + dy) * a.width + (cx + dx)]) {
                            ok = false;
                            break;
                        }
                if (!ok) continue;
            }
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int dy = -5; dy <= 5; ++dy)
                for (int dx = -5; dx <= 5; ++dx) {
                    const double wgt = w[static_cast<std::size_t>((dy + 5) * 11 + (dx + 5))];
                    const double va = a.at(cx + dx, cy + dy);
                    const double vb = b.at(cx + dx, cy + dy);
                    mu_a += wgt * va;
                    mu_b += wgt * vb;
                    aa += wgt * va * va;
                    bb += wgt * vb * vb;
                    ab += wgt * va * vb;
                }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            ++n_windows;
        }
    }
    if (n_windows == 0) throw InvariantError("ssim: no fully valid windows");
    return total / static_cast<double>(n_windows);
}

// Mean squared forward-difference gradient magnitude over the
// (width-1) x (height-1) grid where both differences exist.
inline double gradient_energy(const GrayImage& img) {
    check_image(img);
    if (img.width < 2 || img.height < 2)
        throw InvariantError("gradient_energy: image must be at least 2x2");
    double sum = 0.0;
    for (int y = 0; y + 1 < img.height; ++y)
        for (int x = 0; x + 1 < img.width; ++x) {
            const double gx = img.at(x + 1, y) - img.at(x, y);
            const double gy = img.at(x, y + 1) - img.at(x, y);
            sum += gx * gx + gy * gy;
        }
    return sum / (static_cast<double>(img.width - 1) * (img.height - 1));
}

} // namespace thermforge
