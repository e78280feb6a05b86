#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "thermforge/image.hpp"
#include "thermforge/rng.hpp"

namespace helpers {

inline thermforge::GrayImage random_gray(thermforge::Rng& rng, int w, int h, double lo = 0.0,
                                         double hi = 255.0) {
    thermforge::GrayImage img(w, h);
    for (auto& v : img.values) v = rng.uniform(lo, hi);
    return img;
}

inline thermforge::ThermalFrame random_frame(thermforge::Rng& rng, int w, int h) {
    thermforge::ThermalFrame f;
    f.width = w;
    f.height = h;
    f.dn.resize(static_cast<std::size_t>(w) * h);
    for (auto& v : f.dn) v = static_cast<std::uint16_t>(rng.next_u64() % 65536);
    return f;
}

inline thermforge::RgbFrame random_rgb(thermforge::Rng& rng, int w, int h) {
    thermforge::RgbFrame f;
    f.width = w;
    f.height = h;
    f.rgb.resize(3 * static_cast<std::size_t>(w) * h);
    for (auto& v : f.rgb) v = static_cast<std::uint8_t>(rng.next_u64() % 256);
    return f;
}

// 10-90% transition width of a vertical edge, measured on the row-averaged
// profile and linearly interpolated between samples. Works for rising and
// falling edges; `edge_x` centers the plateau estimation windows.
inline double edge_width_10_90(const thermforge::GrayImage& img, int edge_x) {
    const int w = img.width;
    std::vector<double> profile(static_cast<std::size_t>(w), 0.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < w; ++x) profile[static_cast<std::size_t>(x)] += img.at(x, y);
    for (auto& v : profile) v /= static_cast<double>(img.height);

    const int margin = std::max(2, w / 8);
    const int left_end = std::max(1, std::min(edge_x - margin, w / 4));
    const int right_start = std::min(w - 1, std::max(edge_x + margin, 3 * w / 4));
    double left = 0.0, right = 0.0;
    for (int x = 0; x < left_end; ++x) left += profile[static_cast<std::size_t>(x)];
    left /= left_end;
    for (int x = right_start; x < w; ++x) right += profile[static_cast<std::size_t>(x)];
    right /= (w - right_start);
    const double span = right - left;
    if (std::fabs(span) < 1e-12) return 0.0;

    auto crossing = [&](double level) {
        for (int x = 1; x < w; ++x) {
            const double a = (profile[static_cast<std::size_t>(x - 1)] - left) / span;
            const double b = (profile[static_cast<std::size_t>(x)] - left) / span;
            if (a < level && b >= level) return (x - 1) + (level - a) / (b - a);
        }
        return static_cast<double>(w - 1);
    };
    return crossing(0.9) - crossing(0.1);
}

// unique scratch directory under the system temp root, removed on destruction
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        dir_ = std::filesystem::temp_directory_path() /
               ("thermforge_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

} // namespace helpers
