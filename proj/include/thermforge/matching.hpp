#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "thermforge/errors.hpp"
#include "thermforge/image.hpp"

namespace thermforge {

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const Rect&) const = default;
};

inline Rect clamp_rect(Rect r, int bound_w, int bound_h) {
    const int x0 = std::clamp(r.x, 0, bound_w);
    const int y0 = std::clamp(r.y, 0, bound_h);
    const int x1 = std::clamp(r.x + r.w, 0, bound_w);
    const int y1 = std::clamp(r.y + r.h, 0, bound_h);
    return {x0, y0, x1 - x0, y1 - y0};
}

// Best template placement: offset in search-image coordinates, the template
// resize factor that produced it, and the zero-mean NCC score there.
struct MatchResult {
    int x_star = 0;
    int y_star = 0;
    double scale = 1.0;
    double score = -1.0;
    bool accepted = false;
};

// Paired crop rectangles, each in its image's original coordinate system.
struct CropSpec {
    Rect rect_lo;
    Rect rect_hi;
    Rect rect_rgb;
    int padding = 0;
};

// Zero-mean normalized cross-correlation of the template against every
// placement. Output size (W-w+1) x (H-h+1); windows with zero variance
// score 0. Running sums in double precision, no FFT.
inline GrayImage ncc_map(const GrayImage& search, const GrayImage& templ) {
    check_image(search);
    check_image(templ);
    if (templ.width > search.width || templ.height > search.height)
        throw InvariantError("ncc_map: template larger than search image");

    const int tw = templ.width, th = templ.height;
    const std::size_t tn = templ.size();

    double t_mean = 0.0;
    for (double v : templ.values) t_mean += v;
    t_mean /= static_cast<double>(tn);
    std::vector<double> t_zero(tn);
    double t_den = 0.0;
    for (std::size_t i = 0; i < tn; ++i) {
        t_zero[i] = templ.values[i] - t_mean;
        t_den += t_zero[i] * t_zero[i];
    }
    if (!(t_den > 0.0)) throw InvariantError("ncc_map: degenerate template with zero variance");

    // integral image of the search for O(1) window means
    const int sw = search.width, sh = search.height;
    std::vector<double> integral(static_cast<std::size_t>(sw + 1) * (sh + 1), 0.0);
    for (int y = 0; y < sh; ++y) {
        double row = 0.0;
        for (int x = 0; x < sw; ++x) {
            row += search.at(x, y);
            integral[static_cast<std::size_t>(y + 1) * (sw + 1) + (x + 1)] =
                integral[static_cast<std::size_t>(y) * (sw + 1) + (x + 1)] + row;
        }
    }
    auto window_sum = [&](int x, int y) {
        return integral[static_cast<std::size_t>(y + th) * (sw + 1) + (x + tw)] -
               integral[static_cast<std::size_t>(y) * (sw + 1) + (x + tw)] -
               integral[static_cast<std::size_t>(y + th) * (sw + 1) + x] +
               integral[static_cast<std::size_t>(y) * (sw + 1) + x];
    };

    GrayImage map(sw - tw + 1, sh - th + 1);
    const double inv_tn = 1.0 / static_cast<double>(tn);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double w_mean = window_sum(x, y) * inv_tn;
            double num = 0.0, w_den = 0.0;
            for (int dy = 0; dy < th; ++dy) {
                const double* srow = &search.values[static_cast<std::size_t>(y + dy) * sw + x];
                const double* trow = &t_zero[static_cast<std::size_t>(dy) * tw];
                for (int dx = 0; dx < tw; ++dx) {
                    const double sv = srow[dx] - w_mean;
                    num += trow[dx] * sv;
                    w_den += sv * sv;
                }
            }
            map.at(x, y) = (w_den > 0.0) ? num / std::sqrt(t_den * w_den) : 0.0;
        }
    }
    return map;
}

inline std::pair<int, int> scaled_dims(int w, int h, double scale) {
    const int sw = static_cast<int>(std::llround(w * scale));
    const int sh = static_cast<int>(std::llround(h * scale));
    return {std::max(sw, 1), std::max(sh, 1)};
}

// Sweeps the template over the given resize factors (bilinear) and returns
// the global argmax. Ties break to the smallest scale, then smallest y,
// then smallest x, so results do not depend on evaluation order.
inline MatchResult best_match(const GrayImage& search, const GrayImage& templ,
                              const std::vector<double>& scales, double threshold) {
    check_image(search);
    check_image(templ);
    if (scales.empty()) throw InvariantError("best_match: empty scale list");

    bool any_fit = false;
    MatchResult best;
    bool have_best = false;
    for (double s : scales) {
        const auto [tw, th] = scaled_dims(templ.width, templ.height, s);
        if (tw > search.width || th > search.height) continue;
        any_fit = true;
        const GrayImage resized = (tw == templ.width && th == templ.height)
                                      ? templ
                                      : resize_bilinear(templ, tw, th);
        const GrayImage map = ncc_map(search, resized);
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x) {
                const double v = map.at(x, y);
                const bool better =
                    !have_best || v > best.score ||
                    (v == best.score && (s < best.scale ||
                                         (s == best.scale && (y < best.y_star ||
                                                              (y == best.y_star && x < best.x_star)))));
                if (better) {
                    best = MatchResult{x, y, s, v, false};
                    have_best = true;
                }
            }
    }
    if (!any_fit) throw InvariantError("best_match: no scale fits the template in the search image");
    best.accepted = best.score >= threshold;
    return best;
}

// Maps the accepted match back to original-resolution crop rectangles.
// The padded bounding box lives in low-res coordinates; the high-res and
// RGB rectangles are that box mapped through the scale factor and the
// RGB:thermal resolution ratio, each clamped to its own image bounds.
inline CropSpec derive_crops(const MatchResult& match, int lo_w, int lo_h, int hi_w, int hi_h,
                             int rgb_w, int rgb_h, int padding) {
    if (!match.accepted) throw InvariantError("derive_crops: match was not accepted");
    if (padding < 0) throw InvariantError("derive_crops: padding must be >= 0");

    const auto [fw, fh] = scaled_dims(hi_w, hi_h, match.scale);
    const Rect padded{match.x_star - padding, match.y_star - padding,
                      fw + 2 * padding, fh + 2 * padding};

    CropSpec spec;
    spec.padding = padding;
    spec.rect_lo = clamp_rect(padded, lo_w, lo_h);

    const double inv_s = 1.0 / match.scale;
    const Rect hi_rect{static_cast<int>(std::llround((padded.x - match.x_star) * inv_s)),
                       static_cast<int>(std::llround((padded.y - match.y_star) * inv_s)),
                       static_cast<int>(std::llround(padded.w * inv_s)),
                       static_cast<int>(std::llround(padded.h * inv_s))};
    spec.rect_hi = clamp_rect(hi_rect, hi_w, hi_h);

    const double rx = static_cast<double>(rgb_w) / lo_w;
    const double ry = static_cast<double>(rgb_h) / lo_h;
    const Rect rgb_rect{static_cast<int>(std::llround(padded.x * rx)),
                        static_cast<int>(std::llround(padded.y * ry)),
                        static_cast<int>(std::llround(padded.w * rx)),
                        static_cast<int>(std::llround(padded.h * ry))};
    spec.rect_rgb = clamp_rect(rgb_rect, rgb_w, rgb_h);
    return spec;
}

inline GrayImage crop(const GrayImage& img, const Rect& r) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > img.width || r.y + r.h > img.height)
        throw InvariantError("crop: rectangle out of bounds");
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
    return out;
}

} // namespace thermforge
