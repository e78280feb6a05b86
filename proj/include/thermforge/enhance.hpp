#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "thermforge/errors.hpp"
#include "thermforge/image.hpp"
#include "thermforge/matching.hpp"

namespace thermforge {

// Guide/thermal pair after translation alignment.
struct AlignedPair {
    GrayImage thermal_lo;
    RgbFrame guide_rgb; // shifted into thermal alignment, guide resolution
    GrayImage proxy;    // domain-translated guide at thermal resolution
    int offset_x = 0;   // applied shift, thermal pixels
    int offset_y = 0;
    double score = 0.0;
};

// Window radius defaults to the upsampling factor: the detail band the
// guide restores then matches the band the downsampling lost, and halo
// artifacts stay inside the bilinear transition width.
struct GuidedSrConfig {
    int factor = 4;
    int radius = 4;           // guide-filter window radius, high-res pixels
    double epsilon = 65.025;  // 1e-3 of the squared 8-bit guide range
};

struct LossWeights {
    double alpha = 1.0; // adversarial term weight
};

inline void check_config(const GuidedSrConfig& c) {
    if (c.factor < 1) throw InvariantError("GuidedSrConfig: factor must be >= 1");
    if (c.radius < 1) throw InvariantError("GuidedSrConfig: radius must be >= 1");
    if (!(c.epsilon > 0.0)) throw InvariantError("GuidedSrConfig: epsilon must be > 0");
}

// Thrown when no translation reaches the acceptance threshold.
class UnalignedError : public std::runtime_error {
public:
    UnalignedError(double score, double threshold)
        : std::runtime_error("align_guide: best NCC " + std::to_string(score) +
                             " below threshold " + std::to_string(threshold)),
          best_score(score) {}
    double best_score;
};

// Deterministic stand-in for learned RGB-to-thermal domain translation:
// grayscale reduction, histogram match onto the thermal distribution, then
// resize to thermal resolution. A constant thermal reference yields a
// constant proxy rather than an error.
inline GrayImage domain_proxy(const RgbFrame& guide, const GrayImage& thermal) {
    check_frame(guide);
    check_image(thermal);
    GrayImage gray = histogram_match(rgb_to_gray(guide), thermal);
    if (gray.width == thermal.width && gray.height == thermal.height) return gray;
    if (gray.width % thermal.width == 0 && gray.height % thermal.height == 0 &&
        gray.width / thermal.width == gray.height / thermal.height)
        return downsample_area(gray, gray.width / thermal.width);
    return resize_bilinear(gray, thermal.width, thermal.height);
}

namespace detail {

// Zero-mean NCC between a shifted by (dx, dy) and b, over the overlap.
inline double shifted_ncc(const GrayImage& a, const GrayImage& b, int dx, int dy) {
    const int x0 = std::max(0, dx), x1 = std::min(a.width, a.width + dx);
    const int y0 = std::max(0, dy), y1 = std::min(a.height, a.height + dy);
    const int n = (x1 - x0) * (y1 - y0);
    if (n < 2) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            ma += a.at(x - dx, y - dy);
            mb += b.at(x, y);
        }
    ma /= n;
    mb /= n;
    double num = 0.0, da = 0.0, db = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double va = a.at(x - dx, y - dy) - ma;
            const double vb = b.at(x, y) - mb;
            num += va * vb;
            da += va * va;
            db += vb * vb;
        }
    if (!(da > 0.0) || !(db > 0.0)) return 0.0;
    return num / std::sqrt(da * db);
}

inline GrayImage shift_clamp(const GrayImage& img, int dx, int dy) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(std::clamp(x - dx, 0, img.width - 1),
                                  std::clamp(y - dy, 0, img.height - 1));
    return out;
}

inline RgbFrame shift_clamp(const RgbFrame& img, int dx, int dy) {
    RgbFrame out;
    out.width = img.width;
    out.height = img.height;
    out.capture_id = img.capture_id;
    out.rgb.resize(img.rgb.size());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* src = img.pixel(std::clamp(x - dx, 0, img.width - 1),
                                                std::clamp(y - dy, 0, img.height - 1));
            std::uint8_t* dst = out.rgb.data() + 3 * (static_cast<std::size_t>(y) * img.width + x);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    return out;
}

// Box mean with clamped borders: each output is the mean over the window
// pixels that fall inside the image.
inline GrayImage box_mean(const GrayImage& img, int radius) {
    const int w = img.width, h = img.height;
    std::vector<double> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += img.at(x, y);
            integral[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                integral[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h, y + radius + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(w, x + radius + 1);
            const double sum = integral[static_cast<std::size_t>(y1) * (w + 1) + x1] -
                               integral[static_cast<std::size_t>(y0) * (w + 1) + x1] -
                               integral[static_cast<std::size_t>(y1) * (w + 1) + x0] +
                               integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
            out.at(x, y) = sum / ((x1 - x0) * (y1 - y0));
        }
    }
    return out;
}

} // namespace detail

// Translation-only alignment of the guide to the thermal frame: exhaustive
// search over offsets in [-r, r]^2 maximizing zero-mean NCC between the
// domain proxy and the thermal image. Ties prefer the smallest offset
// (L1 norm, then dy, then dx). Throws UnalignedError below threshold.
inline AlignedPair align_guide(const RgbFrame& guide, const GrayImage& thermal, int search_radius,
                               double threshold) {
    check_frame(guide);
    check_image(thermal);
    if (search_radius < 0) throw InvariantError("align_guide: search radius must be >= 0");
    if (guide.width % thermal.width != 0 || guide.height % thermal.height != 0 ||
        guide.width / thermal.width != guide.height / thermal.height)
        throw InvariantError("align_guide: guide dims must be an integer multiple of thermal dims");
    const int guide_scale = guide.width / thermal.width;

    const GrayImage proxy = domain_proxy(guide, thermal);

    int best_dx = 0, best_dy = 0;
    double best_score = -2.0;
    for (int dy = -search_radius; dy <= search_radius; ++dy)
        for (int dx = -search_radius; dx <= search_radius; ++dx) {
            const double s = detail::shifted_ncc(proxy, thermal, dx, dy);
            const bool better =
                s > best_score ||
                (s == best_score &&
                 (std::abs(dx) + std::abs(dy) < std::abs(best_dx) + std::abs(best_dy) ||
                  (std::abs(dx) + std::abs(dy) == std::abs(best_dx) + std::abs(best_dy) &&
                   (dy < best_dy || (dy == best_dy && dx < best_dx)))));
            if (better) {
                best_score = s;
                best_dx = dx;
                best_dy = dy;
            }
        }
    if (best_score < threshold) throw UnalignedError(best_score, threshold);

    AlignedPair pair;
    pair.thermal_lo = thermal;
    pair.guide_rgb = detail::shift_clamp(guide, best_dx * guide_scale, best_dy * guide_scale);
    pair.proxy = detail::shift_clamp(proxy, best_dx, best_dy);
    pair.offset_x = best_dx;
    pair.offset_y = best_dy;
    pair.score = best_score;
    return pair;
}

// Edge-preserving fusion: bilinear-upsample the thermal input, then add
// guide detail through a per-window linear model. a = cov(guide, up) /
// (var(guide) + eps) is box-averaged and applied to the guide's deviation
// from its local mean, so an uninformative guide leaves the bilinear
// upsample untouched and a constant thermal input stays constant.
inline GrayImage guided_upsample(const GrayImage& thermal_lo, const AlignedPair& pair,
                                 const GuidedSrConfig& config) {
    check_image(thermal_lo);
    check_config(config);

    const int out_w = thermal_lo.width * config.factor;
    const int out_h = thermal_lo.height * config.factor;
    const GrayImage up = upsample_bilinear(thermal_lo, config.factor);

    GrayImage guide = rgb_to_gray(pair.guide_rgb);
    if (guide.width != out_w || guide.height != out_h) {
        if (guide.width % out_w == 0 && guide.height % out_h == 0 &&
            guide.width / out_w == guide.height / out_h)
            guide = downsample_area(guide, guide.width / out_w);
        else
            guide = resize_bilinear(guide, out_w, out_h);
    }

    const int r = config.radius;
    const GrayImage mean_g = detail::box_mean(guide, r);
    const GrayImage mean_u = detail::box_mean(up, r);

    GrayImage gg(out_w, out_h), gu(out_w, out_h);
    for (std::size_t i = 0; i < gg.size(); ++i) {
        gg.values[i] = guide.values[i] * guide.values[i];
        gu.values[i] = guide.values[i] * up.values[i];
    }
    const GrayImage mean_gg = detail::box_mean(gg, r);
    const GrayImage mean_gu = detail::box_mean(gu, r);

    GrayImage a(out_w, out_h);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double var = mean_gg.values[i] - mean_g.values[i] * mean_g.values[i];
        const double cov = mean_gu.values[i] - mean_g.values[i] * mean_u.values[i];
        a.values[i] = cov / (std::max(var, 0.0) + config.epsilon);
    }
    const GrayImage a_bar = detail::box_mean(a, r);

    GrayImage out(out_w, out_h);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = up.values[i] + a_bar.values[i] * (guide.values[i] - mean_g.values[i]);
    return out;
}

// --- loss operations ---

inline void require_same_dims(const GrayImage& a, const GrayImage& b, const char* op) {
    if (a.width != b.width || a.height != b.height)
        throw InvariantError(std::string(op) + ": dimension mismatch");
}

// Mean absolute difference.
inline double cycle_consistency_loss(const GrayImage& original, const GrayImage& reconstructed) {
    require_same_dims(original, reconstructed, "cycle_consistency_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i)
        sum += std::fabs(original.values[i] - reconstructed.values[i]);
    return sum / static_cast<double>(original.size());
}

// Mean squared difference.
inline double identity_loss(const GrayImage& target, const GrayImage& translated) {
    require_same_dims(target, translated, "identity_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = target.values[i] - translated.values[i];
        sum += d * d;
    }
    return sum / static_cast<double>(target.size());
}

inline double mse_loss(const GrayImage& high_res, const GrayImage& generated) {
    require_same_dims(high_res, generated, "mse_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < high_res.size(); ++i) {
        const double d = high_res.values[i] - generated.values[i];
        sum += d * d;
    }
    return sum / static_cast<double>(high_res.size());
}

using FeatureGrid = std::vector<GrayImage>;

// Built-in feature extractor: fixed 3x3 edge-response bank (horizontal,
// vertical, two diagonals), borders clamped. Any caller-supplied extractor
// producing equal-shaped grids can substitute for it in content_loss.
inline FeatureGrid edge_feature_bank(const GrayImage& img) {
    check_image(img);
    static constexpr std::array<std::array<double, 9>, 4> kernels{{
        {-1, 0, 1, -2, 0, 2, -1, 0, 1},  // horizontal gradient
        {-1, -2, -1, 0, 0, 0, 1, 2, 1},  // vertical gradient
        {0, 1, 2, -1, 0, 1, -2, -1, 0},  // diagonal
        {2, 1, 0, 1, 0, -1, 0, -1, -2},  // anti-diagonal
    }};
    FeatureGrid features;
    features.reserve(kernels.size());
    for (const auto& k : kernels) {
        GrayImage f(img.width, img.height);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int sx = std::clamp(x + dx, 0, img.width - 1);
                        const int sy = std::clamp(y + dy, 0, img.height - 1);
                        acc += k[static_cast<std::size_t>((dy + 1) * 3 + (dx + 1))] * img.at(sx, sy);
                    }
                f.at(x, y) = acc;
            }
        features.push_back(std::move(f));
    }
    return features;
}

// Mean squared feature difference across all channels.
inline double content_loss(const FeatureGrid& features_a, const FeatureGrid& features_b) {
    if (features_a.size() != features_b.size() || features_a.empty())
        throw InvariantError("content_loss: feature grids must have equal non-zero channel counts");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < features_a.size(); ++c) {
        require_same_dims(features_a[c], features_b[c], "content_loss");
        for (std::size_t i = 0; i < features_a[c].size(); ++i) {
            const double d = features_a[c].values[i] - features_b[c].values[i];
            sum += d * d;
        }
        n += features_a[c].size();
    }
    return sum / static_cast<double>(n);
}

// Negative log discriminator probability.
inline double adversarial_loss(double discriminator_output) {
    if (!(discriminator_output > 0.0) || discriminator_output > 1.0)
        throw InvariantError("adversarial_loss: probability must be in (0, 1]");
    return -std::log(discriminator_output);
}

inline double total_loss(double cycle, double identity, double mse, double content,
                         double adversarial, const LossWeights& weights) {
    for (double v : {cycle, identity, mse, content, adversarial, weights.alpha})
        if (!std::isfinite(v)) throw InvariantError("total_loss: non-finite input");
    return (cycle + identity) + (mse + content + weights.alpha * adversarial);
}

} // namespace thermforge
