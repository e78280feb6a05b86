#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "thermforge/errors.hpp"
#include "thermforge/image.hpp"

namespace thermforge {

// Sensor-model constants for converting raw digital numbers to temperature:
//   T(degC) = B / ln(R1 / (R2 * (DN + O)) + F) - 273.15
struct RadiometricParams {
    double r1 = 0.0;
    double r2 = 0.0;
    double b = 0.0;
    double f = 0.0;
    double o = 0.0;
};

// Typical factory constants for a FLIR One Pro class sensor.
inline RadiometricParams flir_one_pro_factory() {
    return {18333.4, 0.0125, 1435.0, 1.0, -2284.0};
}

// Water-bath recalibrated constants for the same sensor class; only R1 and
// O move, R2/B/F are shared across units.
inline RadiometricParams flir_one_pro_lab_calibrated() {
    return {12755.4, 0.0125, 1435.0, 1.0, -6707.0};
}

struct MeasuringRange {
    double min_c = -20.0;
    double max_c = 120.0;
};

// Per-pixel temperatures with a validity mask. Invalid pixels hold a
// sentinel value and must be excluded from all statistics.
struct TemperatureMap {
    int width = 0;
    int height = 0;
    std::vector<double> celsius;
    std::vector<std::uint8_t> valid;
    bool all_invalid = false; // warning flag set by convert_frame

    TemperatureMap() = default;
    TemperatureMap(int w, int h)
        : width(w), height(h),
          celsius(static_cast<std::size_t>(w) * h, 0.0),
          valid(static_cast<std::size_t>(w) * h, 0) {}

    double at(int x, int y) const { return celsius[static_cast<std::size_t>(y) * width + x]; }
    bool is_valid(int x, int y) const { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto v : valid) n += v != 0;
        return n;
    }
};

inline void check_params(const RadiometricParams& p) {
    if (!(p.r1 > 0.0) || !(p.r2 > 0.0) || !(p.b > 0.0))
        throw InvariantError("RadiometricParams: r1, r2, b must be > 0");
}

inline void check_range(const MeasuringRange& r) {
    if (!(r.min_c < r.max_c))
        throw InvariantError("MeasuringRange: min_c must be < max_c");
}

// True when dn satisfies the sensor-model domain: dn + O > 0 and the
// logarithm argument exceeds 1 so the log is positive.
inline bool dn_in_domain(double dn, const RadiometricParams& p) {
    const double shifted = dn + p.o;
    if (!(shifted > 0.0)) return false;
    const double arg = p.r1 / (p.r2 * shifted) + p.f;
    return arg > 1.0;
}

inline double temperature_of_dn(double dn, const RadiometricParams& p) {
    check_params(p);
    const double shifted = dn + p.o;
    if (!(shifted > 0.0))
        throw DomainError("temperature_of_dn: dn + O must be > 0 (dn=" + std::to_string(dn) + ")");
    const double arg = p.r1 / (p.r2 * shifted) + p.f;
    if (!(arg > 1.0))
        throw DomainError("temperature_of_dn: log argument must exceed 1 (dn=" + std::to_string(dn) + ")");
    return p.b / std::log(arg) - 273.15;
}

// Closed-form inverse of temperature_of_dn; returns a real (unrounded) DN.
inline double dn_of_temperature(double t_celsius, const RadiometricParams& p) {
    check_params(p);
    const double kelvin = t_celsius + 273.15;
    if (!(kelvin > 0.0))
        throw DomainError("dn_of_temperature: temperature below absolute zero");
    const double denom = std::exp(p.b / kelvin) - p.f;
    if (!(denom > 0.0))
        throw DomainError("dn_of_temperature: exp(B/T) - F must be > 0");
    return p.r1 / (p.r2 * denom) - p.o;
}

// Per-pixel conversion. Pixels outside the sensor-model domain or outside
// the measuring range are masked invalid, never clamped.
inline TemperatureMap convert_frame(const ThermalFrame& frame, const RadiometricParams& params,
                                    const MeasuringRange& range) {
    check_frame(frame);
    check_params(params);
    check_range(range);
    TemperatureMap map(frame.width, frame.height);
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < frame.dn.size(); ++i) {
        const double dn = frame.dn[i];
        if (!dn_in_domain(dn, params)) continue;
        const double t = params.b / std::log(params.r1 / (params.r2 * (dn + params.o)) + params.f) - 273.15;
        map.celsius[i] = t;
        if (t < range.min_c || t > range.max_c) continue;
        map.valid[i] = 1;
        ++n_valid;
    }
    map.all_invalid = n_valid == 0;
    return map;
}

inline GrayImage to_gray(const TemperatureMap& map, double invalid_fill = 0.0) {
    GrayImage out(map.width, map.height);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = map.valid[i] ? map.celsius[i] : invalid_fill;
    return out;
}

} // namespace thermforge
