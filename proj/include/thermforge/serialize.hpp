#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "thermforge/calibrate.hpp"
#include "thermforge/enhance.hpp"
#include "thermforge/errors.hpp"
#include "thermforge/matching.hpp"
#include "thermforge/metrics.hpp"
#include "thermforge/pnm.hpp"
#include "thermforge/radiometry.hpp"

namespace thermforge {

using nlohmann::json;

inline json to_json(const RadiometricParams& p) {
    return json{{"r1", p.r1}, {"r2", p.r2}, {"b", p.b}, {"f", p.f}, {"o", p.o}};
}

inline RadiometricParams params_from_json(const json& j) {
    RadiometricParams p{j.at("r1").get<double>(), j.at("r2").get<double>(), j.at("b").get<double>(),
                        j.at("f").get<double>(), j.at("o").get<double>()};
    check_params(p);
    return p;
}

inline json to_json(const MeasuringRange& r) {
    return json{{"min_c", r.min_c}, {"max_c", r.max_c}};
}

inline MeasuringRange range_from_json(const json& j) {
    MeasuringRange r{j.at("min_c").get<double>(), j.at("max_c").get<double>()};
    check_range(r);
    return r;
}

inline json to_json(const Rect& r) {
    return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

inline Rect rect_from_json(const json& j) {
    return Rect{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

inline json to_json(const MatchResult& m) {
    return json{{"x", m.x_star}, {"y", m.y_star}, {"scale", m.scale},
                {"score", m.score}, {"accepted", m.accepted}};
}

inline json to_json(const CropSpec& c) {
    return json{{"rect_lo", to_json(c.rect_lo)}, {"rect_hi", to_json(c.rect_hi)},
                {"rect_rgb", to_json(c.rect_rgb)}, {"padding", c.padding}};
}

inline json to_json(const CalibrationReport& r) {
    json trace = json::array();
    for (const auto& [iter, value] : r.trace) trace.push_back(json{{"iteration", iter}, {"best", value}});
    return json{{"params_before", to_json(r.params_before)},
                {"params_after", to_json(r.params_after)},
                {"rmse_before", r.rmse_before},
                {"rmse_after", r.rmse_after},
                {"r2_before", r.r2_before},
                {"r2_after", r.r2_after},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"trace", std::move(trace)}};
}

// PSNR can be the +inf sentinel for identical images; JSON carries that as
// null since the format has no infinity literal.
inline json to_json(const MetricReport& m) {
    json j{{"rmse_c", m.rmse_c},
           {"r2", m.r2},
           {"ssim", m.ssim},
           {"gradient_energy_ratio", m.gradient_energy_ratio},
           {"n_pixels", m.n_pixels}};
    if (std::isfinite(m.psnr_db))
        j["psnr_db"] = m.psnr_db;
    else
        j["psnr_db"] = nullptr;
    return j;
}

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("invalid JSON in " + path.string() + ": " + e.what(), e.byte);
    }
}

inline void save_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// --- affine-encoded temperature maps (16-bit PGM + JSON sidecar) ---

struct TemperatureEncoding {
    double slope = 0.0;     // degC per code unit, span/65535
    double intercept = 0.0; // degC at code 0
};

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> invalid_runs(const TemperatureMap& map) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t i = 0;
    const std::size_t n = map.valid.size();
    while (i < n) {
        if (map.valid[i]) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < n && !map.valid[i]) ++i;
        runs.emplace_back(start, i - start);
    }
    return runs;
}

} // namespace detail

// Valid pixels are affine-coded into the full 16-bit range of the measuring
// span; invalid pixels are written as code 0 and recorded as runs in the
// sidecar so the mask survives the round trip.
inline TemperatureEncoding save_temperature_map(const TemperatureMap& map, const MeasuringRange& range,
                                                const std::filesystem::path& pgm_path,
                                                const std::filesystem::path& sidecar_path) {
    check_range(range);
    TemperatureEncoding enc{(range.max_c - range.min_c) / 65535.0, range.min_c};

    ThermalFrame frame;
    frame.width = map.width;
    frame.height = map.height;
    frame.capture_id = pgm_path.stem().string();
    frame.dn.resize(map.celsius.size());
    for (std::size_t i = 0; i < map.celsius.size(); ++i) {
        if (!map.valid[i]) {
            frame.dn[i] = 0;
            continue;
        }
        const long long code = std::llround((map.celsius[i] - enc.intercept) / enc.slope);
        frame.dn[i] = static_cast<std::uint16_t>(std::clamp(code, 0ll, 65535ll));
    }
    save_pgm16(frame, pgm_path);

    json runs = json::array();
    for (const auto& [start, len] : detail::invalid_runs(map)) runs.push_back(json::array({start, len}));
    const json sidecar{{"encoding", {{"slope", enc.slope}, {"intercept", enc.intercept}}},
                       {"range", to_json(range)},
                       {"width", map.width},
                       {"height", map.height},
                       {"valid_count", map.valid_count()},
                       {"invalid_count", map.celsius.size() - map.valid_count()},
                       {"invalid_runs", runs}};
    save_json_file(sidecar, sidecar_path);
    return enc;
}

struct DecodedTemperatureMap {
    TemperatureMap map;
    MeasuringRange range;
    TemperatureEncoding encoding;
};

inline DecodedTemperatureMap load_temperature_map(const std::filesystem::path& pgm_path,
                                                  const std::filesystem::path& sidecar_path) {
    const ThermalFrame frame = load_pgm16(pgm_path);
    const json sidecar = load_json_file(sidecar_path);
    DecodedTemperatureMap out;
    out.encoding.slope = sidecar.at("encoding").at("slope").get<double>();
    out.encoding.intercept = sidecar.at("encoding").at("intercept").get<double>();
    out.range = range_from_json(sidecar.at("range"));
    if (sidecar.at("width").get<int>() != frame.width || sidecar.at("height").get<int>() != frame.height)
        throw ParseError("sidecar dims disagree with PGM " + pgm_path.string(), 0);

    out.map = TemperatureMap(frame.width, frame.height);
    for (std::size_t i = 0; i < frame.dn.size(); ++i) {
        out.map.celsius[i] = out.encoding.intercept + frame.dn[i] * out.encoding.slope;
        out.map.valid[i] = 1;
    }
    for (const auto& run : sidecar.at("invalid_runs")) {
        const std::size_t start = run.at(0).get<std::size_t>();
        const std::size_t len = run.at(1).get<std::size_t>();
        if (start + len > out.map.valid.size())
            throw ParseError("invalid run out of bounds in " + sidecar_path.string(), 0);
        for (std::size_t i = start; i < start + len; ++i) {
            out.map.valid[i] = 0;
            out.map.celsius[i] = 0.0;
        }
    }
    out.map.all_invalid = out.map.valid_count() == 0;
    return out;
}

} // namespace thermforge
