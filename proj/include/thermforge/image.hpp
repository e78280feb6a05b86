#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermforge/errors.hpp"

namespace thermforge {

// Raw thermal frame: row-major 16-bit digital numbers straight off the sensor.
struct ThermalFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> dn;
    std::string capture_id;
    std::optional<double> timestamp; // seconds since epoch

    std::uint16_t at(int x, int y) const { return dn[static_cast<std::size_t>(y) * width + x]; }
    std::uint16_t& at(int x, int y) { return dn[static_cast<std::size_t>(y) * width + x]; }
};

// Interleaved 8-bit RGB image.
struct RgbFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb; // 3 bytes per pixel, row-major
    std::string capture_id;

    const std::uint8_t* pixel(int x, int y) const {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

// Real-valued single-channel image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }
};

inline void check_frame(const ThermalFrame& f) {
    if (f.width < 1 || f.height < 1)
        throw InvariantError("ThermalFrame: width and height must be >= 1");
    if (f.dn.size() != static_cast<std::size_t>(f.width) * f.height)
        throw InvariantError("ThermalFrame: dn length != width*height");
}

inline void check_frame(const RgbFrame& f) {
    if (f.width < 1 || f.height < 1)
        throw InvariantError("RgbFrame: width and height must be >= 1");
    if (f.rgb.size() != 3 * static_cast<std::size_t>(f.width) * f.height)
        throw InvariantError("RgbFrame: rgb length != 3*width*height");
}

inline void check_image(const GrayImage& img) {
    if (img.width < 1 || img.height < 1)
        throw InvariantError("GrayImage: width and height must be >= 1");
    if (img.values.size() != static_cast<std::size_t>(img.width) * img.height)
        throw InvariantError("GrayImage: values length != width*height");
}

// ITU-R 601 luma weights.
inline double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

inline GrayImage rgb_to_gray(const RgbFrame& frame) {
    check_frame(frame);
    GrayImage out(frame.width, frame.height);
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* p = frame.rgb.data() + 3 * i;
        out.values[i] = luminance(p[0], p[1], p[2]);
    }
    return out;
}

inline GrayImage dn_to_gray(const ThermalFrame& frame) {
    check_frame(frame);
    GrayImage out(frame.width, frame.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = frame.dn[i];
    return out;
}

// Bilinear resize to explicit output dims. Sample centers follow the
// half-pixel convention: src = (dst + 0.5) * (in/out) - 0.5, borders clamped.
inline GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    check_image(img);
    if (out_w < 1 || out_h < 1)
        throw InvariantError("resize_bilinear: output dims must be >= 1");
    GrayImage out(out_w, out_h);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            const double top = img.at(x0, y0) * (1.0 - wx) + img.at(x1, y0) * wx;
            const double bot = img.at(x0, y1) * (1.0 - wx) + img.at(x1, y1) * wx;
            out.at(x, y) = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

inline GrayImage upsample_bilinear(const GrayImage& img, int factor) {
    if (factor < 1) throw InvariantError("upsample_bilinear: factor must be >= 1");
    if (factor == 1) return img;
    return resize_bilinear(img, img.width * factor, img.height * factor);
}

// Each output pixel is the mean of its factor x factor input block.
inline GrayImage downsample_area(const GrayImage& img, int factor) {
    check_image(img);
    if (factor < 1) throw InvariantError("downsample_area: factor must be >= 1");
    if (factor == 1) return img;
    if (img.width % factor != 0 || img.height % factor != 0)
        throw InvariantError("downsample_area: dims not divisible by factor");
    GrayImage out(img.width / factor, img.height / factor);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            double sum = 0.0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx)
                    sum += img.at(x * factor + dx, y * factor + dy);
            out.at(x, y) = sum * inv;
        }
    }
    return out;
}

namespace detail {

struct Histogram256 {
    double lo = 0.0;
    double bin_width = 0.0; // 0 for a constant image
    std::array<double, 256> cdf{};

    int bin_of(double v) const {
        if (bin_width <= 0.0) return 0;
        int b = static_cast<int>((v - lo) / bin_width);
        return std::clamp(b, 0, 255);
    }
    double bin_center(int b) const { return lo + (b + 0.5) * bin_width; }
};

inline Histogram256 build_histogram(const GrayImage& img) {
    Histogram256 h;
    auto [mn, mx] = std::minmax_element(img.values.begin(), img.values.end());
    h.lo = *mn;
    h.bin_width = (*mx - *mn) / 256.0;
    std::array<double, 256> counts{};
    for (double v : img.values) counts[static_cast<std::size_t>(h.bin_of(v))] += 1.0;
    double acc = 0.0;
    const double inv_n = 1.0 / static_cast<double>(img.size());
    for (int b = 0; b < 256; ++b) {
        acc += counts[static_cast<std::size_t>(b)];
        h.cdf[static_cast<std::size_t>(b)] = acc * inv_n;
    }
    return h;
}

} // namespace detail

// Monotone 256-bin CDF remapping of source intensities onto the
// reference distribution. Output values are reference bin centers,
// clamped to the reference min/max.
inline GrayImage histogram_match(const GrayImage& source, const GrayImage& reference) {
    check_image(source);
    check_image(reference);
    const auto hs = detail::build_histogram(source);
    const auto hr = detail::build_histogram(reference);

    const double ref_min = hr.lo;
    const double ref_max = hr.lo + 256.0 * hr.bin_width;

    // Per-source-bin lookup: smallest reference bin whose CDF reaches the
    // source bin's CDF.
    std::array<double, 256> lut{};
    for (int b = 0; b < 256; ++b) {
        const double u = hs.cdf[static_cast<std::size_t>(b)] - 1e-12;
        const auto it = std::lower_bound(hr.cdf.begin(), hr.cdf.end(), u);
        const int k = static_cast<int>(std::min<std::ptrdiff_t>(it - hr.cdf.begin(), 255));
        lut[static_cast<std::size_t>(b)] = std::clamp(hr.bin_center(k), ref_min, ref_max);
    }

    GrayImage out(source.width, source.height);
    for (std::size_t i = 0; i < source.size(); ++i)
        out.values[i] = lut[static_cast<std::size_t>(hs.bin_of(source.values[i]))];
    return out;
}

} // namespace thermforge
