#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "thermforge/calibrate.hpp"
#include "thermforge/image.hpp"
#include "thermforge/radiometry.hpp"
#include "thermforge/rng.hpp"

// Seeded synthetic-scene generation: smooth soil-temperature fields with
// cooler elliptical leaf regions, an edge-consistent RGB render, and a
// documented sensor forward model, so the whole pipeline can be verified
// at desk scale against known ground truth.

namespace thermforge {

enum class SceneKind { field, step_edge };

struct SyntheticConfig {
    int lo_width = 96;     // low-res canvas, thermal pixels
    int lo_height = 72;
    int region_width = 64; // the high-res camera's footprint, thermal pixels
    int region_height = 48;
    int factor = 4;        // high-res pixels per thermal pixel (also RGB ratio)
    double background_min_c = 22.0;
    double background_max_c = 30.0;
    double leaf_contrast_min_c = 2.0;
    double leaf_contrast_max_c = 8.0;
    double noise_equivalent_c = 0.07; // sensor temperature sensitivity, 70 mK
    double optical_blur_sigma = 1.0;  // high-res pixels
    RadiometricParams params = flir_one_pro_lab_calibrated();
};

struct SyntheticScene {
    TemperatureMap truth_hi;  // ground truth over the high-res footprint
    ThermalFrame thermal_lo;  // simulated DN over the full low-res canvas
    RgbFrame rgb;             // guide covering the low-res canvas at factor x
    int true_dx = 0;          // footprint offset inside the canvas, thermal pixels
    int true_dy = 0;
    double true_scale = 0.25; // template resize factor recovering the embedding
    SceneKind kind = SceneKind::field;
    int edge_column_hi = -1;  // step scenes: edge x in truth coordinates
    double mean_c = 0.0;
};

namespace detail {

inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (double& k : kernel) k /= sum;

    GrayImage tmp(img.width, img.height), out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       img.at(std::clamp(x + i, 0, img.width - 1), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       tmp.at(x, std::clamp(y + i, 0, img.height - 1));
            out.at(x, y) = acc;
        }
    return out;
}

struct Ellipse {
    double cx, cy, ax, ay, cos_t, sin_t, depth_c;

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = (dx * cos_t + dy * sin_t) / ax;
        const double v = (-dx * sin_t + dy * cos_t) / ay;
        return u * u + v * v <= 1.0;
    }
};

} // namespace detail

// Deterministic scene synthesis. The pristine world (smooth field + leaf
// geometry) is rendered at high resolution over the full canvas, optically
// blurred, and the blurred field is the ground truth; the low-res frame is
// then exactly derivable from it: DN conversion per pixel, Gaussian sensor
// noise, area downsample by `factor`, integer quantization.
inline SyntheticScene generate_scene(const Rng& stream, const SyntheticConfig& cfg,
                                     SceneKind kind = SceneKind::field) {
    const int q = cfg.factor;
    const int W = cfg.lo_width * q, H = cfg.lo_height * q;

    Rng field_rng = stream.derive("field");
    Rng leaf_rng = stream.derive("leaves");
    Rng noise_rng = stream.derive("noise");
    Rng rgb_rng = stream.derive("rgb");
    Rng layout_rng = stream.derive("layout");

    SyntheticScene scene;
    scene.kind = kind;
    scene.true_dx = layout_rng.uniform_int(0, cfg.lo_width - cfg.region_width);
    scene.true_dy = layout_rng.uniform_int(0, cfg.lo_height - cfg.region_height);
    scene.true_scale = 1.0 / q;

    // Smooth background field. Step scenes use a y-only wave instead: it
    // breaks the vertical translation ambiguity of a straight edge while
    // adding only a constant to row-averaged column profiles, so plateau
    // levels and edge transition widths stay measurable.
    const double base = field_rng.uniform(cfg.background_min_c, cfg.background_max_c);
    const double amp1 = field_rng.uniform(0.4, 1.2), amp2 = field_rng.uniform(0.2, 0.8);
    const double fx1 = field_rng.uniform(0.5, 1.5), fy1 = field_rng.uniform(0.5, 1.5);
    const double fx2 = field_rng.uniform(1.5, 3.0), fy2 = field_rng.uniform(1.5, 3.0);
    const double ph1 = field_rng.uniform(0.0, 6.28318), ph2 = field_rng.uniform(0.0, 6.28318);

    GrayImage world(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double u = static_cast<double>(x) / W, v = static_cast<double>(y) / H;
            world.at(x, y) =
                base + (kind == SceneKind::field
                            ? amp1 * std::sin(6.28318 * (fx1 * u + fy1 * v) + ph1) +
                                  amp2 * std::sin(6.28318 * (fx2 * u - fy2 * v) + ph2)
                            : 0.8 * amp1 * std::sin(6.28318 * 2.0 * fy1 * v + ph1) +
                                  0.8 * amp2 * std::sin(6.28318 * 9.0 * fy2 * v + ph2));
        }

    // leaf geometry, shared between the thermal world and the RGB render
    std::vector<detail::Ellipse> leaves;
    if (kind == SceneKind::field) {
        const int n_leaves = leaf_rng.uniform_int(5, 9);
        for (int i = 0; i < n_leaves; ++i) {
            const double theta = leaf_rng.uniform(0.0, 3.14159);
            leaves.push_back({leaf_rng.uniform(0.05 * W, 0.95 * W),
                              leaf_rng.uniform(0.05 * H, 0.95 * H),
                              leaf_rng.uniform(2.0 * q, 7.0 * q),
                              leaf_rng.uniform(1.5 * q, 5.0 * q),
                              std::cos(theta), std::sin(theta),
                              leaf_rng.uniform(cfg.leaf_contrast_min_c, cfg.leaf_contrast_max_c)});
        }
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (const auto& e : leaves)
                    if (e.contains(x, y)) {
                        world.at(x, y) -= e.depth_c;
                        break;
                    }
    } else {
        // one straight vertical edge through the middle of the footprint
        const double depth = leaf_rng.uniform(cfg.leaf_contrast_min_c, cfg.leaf_contrast_max_c);
        const int margin = cfg.region_width * q / 4;
        const int edge_x_world = scene.true_dx * q +
                                 leaf_rng.uniform_int(margin, cfg.region_width * q - margin);
        for (int y = 0; y < H; ++y)
            for (int x = edge_x_world; x < W; ++x) world.at(x, y) -= depth;
        scene.edge_column_hi = edge_x_world - scene.true_dx * q;
    }

    // ground truth is the optically blurred field over the footprint
    const GrayImage blurred = detail::gaussian_blur(world, cfg.optical_blur_sigma);
    const int rx = scene.true_dx * q, ry = scene.true_dy * q;
    const int rw = cfg.region_width * q, rh = cfg.region_height * q;
    scene.truth_hi = TemperatureMap(rw, rh);
    for (int y = 0; y < rh; ++y)
        for (int x = 0; x < rw; ++x) {
            scene.truth_hi.celsius[static_cast<std::size_t>(y) * rw + x] = blurred.at(rx + x, ry + y);
            scene.truth_hi.valid[static_cast<std::size_t>(y) * rw + x] = 1;
        }

    // forward sensor model: DN -> noise -> area downsample -> quantize
    double mean_c = 0.0;
    for (double v : blurred.values) mean_c += v;
    mean_c /= static_cast<double>(blurred.values.size());
    scene.mean_c = mean_c;
    const double slope_dn_per_c =
        dn_of_temperature(mean_c + 0.5, cfg.params) - dn_of_temperature(mean_c - 0.5, cfg.params);
    const double sigma_dn = cfg.noise_equivalent_c * slope_dn_per_c;

    GrayImage dn_hi(W, H);
    for (std::size_t i = 0; i < dn_hi.values.size(); ++i)
        dn_hi.values[i] = dn_of_temperature(blurred.values[i], cfg.params) +
                          noise_rng.normal(0.0, sigma_dn);
    const GrayImage dn_lo = downsample_area(dn_hi, q);

    scene.thermal_lo.width = cfg.lo_width;
    scene.thermal_lo.height = cfg.lo_height;
    scene.thermal_lo.dn.resize(dn_lo.values.size());
    for (std::size_t i = 0; i < dn_lo.values.size(); ++i)
        scene.thermal_lo.dn[i] =
            static_cast<std::uint16_t>(std::clamp(std::llround(dn_lo.values[i]), 0ll, 65535ll));

    // RGB render: bright warm soil, darker green leaves, edges co-located
    // with the thermal geometry, mild speckle texture
    double t_min = blurred.values[0], t_max = blurred.values[0];
    for (double v : world.values) {
        t_min = std::min(t_min, v);
        t_max = std::max(t_max, v);
    }
    const double t_span = std::max(t_max - t_min, 1e-9);
    GrayImage r_ch(W, H), g_ch(W, H), b_ch(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            bool leaf = false;
            if (kind == SceneKind::field) {
                for (const auto& e : leaves)
                    if (e.contains(x, y)) {
                        leaf = true;
                        break;
                    }
            } else {
                leaf = x >= scene.true_dx * q + scene.edge_column_hi;
            }
            const double warmth = (world.at(x, y) - t_min) / t_span; // 0..1
            const double speckle = rgb_rng.uniform(-0.04, 0.04);
            if (leaf) {
                const double s = 0.85 + 0.25 * warmth + speckle;
                r_ch.at(x, y) = 58.0 * s;
                g_ch.at(x, y) = 112.0 * s;
                b_ch.at(x, y) = 50.0 * s;
            } else {
                const double s = 0.75 + 0.45 * warmth + speckle;
                r_ch.at(x, y) = 168.0 * s;
                g_ch.at(x, y) = 136.0 * s;
                b_ch.at(x, y) = 104.0 * s;
            }
        }
    const double rgb_blur = 0.6;
    r_ch = detail::gaussian_blur(r_ch, rgb_blur);
    g_ch = detail::gaussian_blur(g_ch, rgb_blur);
    b_ch = detail::gaussian_blur(b_ch, rgb_blur);
    scene.rgb.width = W;
    scene.rgb.height = H;
    scene.rgb.rgb.resize(3 * static_cast<std::size_t>(W) * H);
    for (std::size_t i = 0; i < static_cast<std::size_t>(W) * H; ++i) {
        scene.rgb.rgb[3 * i + 0] = static_cast<std::uint8_t>(std::clamp(std::llround(r_ch.values[i]), 0ll, 255ll));
        scene.rgb.rgb[3 * i + 1] = static_cast<std::uint8_t>(std::clamp(std::llround(g_ch.values[i]), 0ll, 255ll));
        scene.rgb.rgb[3 * i + 2] = static_cast<std::uint8_t>(std::clamp(std::llround(b_ch.values[i]), 0ll, 255ll));
    }
    return scene;
}

// Reference-log synthesis for calibration tests: a linear temperature sweep
// converted through the given params, with optional Gaussian noise on the
// thermocouple side.
inline std::vector<ReferencePair> generate_reference_pairs(const RadiometricParams& params,
                                                           std::size_t count, double t_min_c,
                                                           double t_max_c, double noise_sigma_c,
                                                           Rng rng) {
    std::vector<ReferencePair> pairs;
    pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count > 1 ? t_min_c + (t_max_c - t_min_c) * static_cast<double>(i) /
                                                  static_cast<double>(count - 1)
                                   : t_min_c;
        ReferencePair p;
        p.dn = dn_of_temperature(t, params);
        p.t_ref = t + (noise_sigma_c > 0.0 ? rng.normal(0.0, noise_sigma_c) : 0.0);
        pairs.push_back(p);
    }
    return pairs;
}

} // namespace thermforge
