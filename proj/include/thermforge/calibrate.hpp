#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "thermforge/errors.hpp"
#include "thermforge/metrics.hpp"
#include "thermforge/nelder_mead.hpp"
#include "thermforge/radiometry.hpp"

namespace thermforge {

// One reference-log sample: a raw sensor reading against a thermocouple value.
struct ReferencePair {
    double dn = 0.0;
    double t_ref = 0.0;
};

struct CalibrationReport {
    RadiometricParams params_before;
    RadiometricParams params_after;
    double rmse_before = 0.0;
    double rmse_after = 0.0;
    double r2_before = 0.0;
    double r2_after = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::pair<int, double>> trace;
};

// Sum of squared temperature residuals for free (r1, o) with (r2, b, f)
// fixed. Pairs whose dn falls outside the sensor-model domain contribute a
// large finite penalty so the simplex stays well-formed.
inline double calibration_objective(double r1, double o, const RadiometricParams& fixed,
                                    const std::vector<ReferencePair>& pairs) {
    if (pairs.empty()) throw InvariantError("calibration_objective: empty pair list");
    constexpr double kPenalty = 1e6;
    RadiometricParams p = fixed;
    p.r1 = r1;
    p.o = o;
    if (!(p.r1 > 0.0)) return kPenalty * static_cast<double>(pairs.size());
    double sse = 0.0;
    for (const auto& pair : pairs) {
        if (!dn_in_domain(pair.dn, p)) {
            sse += kPenalty;
            continue;
        }
        const double t = p.b / std::log(p.r1 / (p.r2 * (pair.dn + p.o)) + p.f) - 273.15;
        const double r = t - pair.t_ref;
        sse += r * r;
    }
    return sse;
}

namespace detail {

inline void fit_quality(const RadiometricParams& p, const std::vector<ReferencePair>& pairs,
                        double& rmse_out, double& r2_out) {
    std::vector<double> predicted, reference;
    predicted.reserve(pairs.size());
    reference.reserve(pairs.size());
    double sse = 0.0;
    for (const auto& pair : pairs) {
        if (!dn_in_domain(pair.dn, p)) continue;
        const double t = temperature_of_dn(pair.dn, p);
        predicted.push_back(t);
        reference.push_back(pair.t_ref);
        const double r = t - pair.t_ref;
        sse += r * r;
    }
    if (predicted.empty()) {
        rmse_out = std::numeric_limits<double>::infinity();
        r2_out = -std::numeric_limits<double>::infinity();
        return;
    }
    rmse_out = std::sqrt(sse / static_cast<double>(predicted.size()));
    r2_out = r_squared(predicted, reference);
}

} // namespace detail

// Two-parameter (R1, O) fit of the sensor model against reference pairs.
inline CalibrationReport calibrate(const std::vector<ReferencePair>& pairs,
                                   const RadiometricParams& initial,
                                   const SimplexConfig& config = {}) {
    check_params(initial);
    if (pairs.size() < 2)
        throw InvariantError("calibrate: need at least 2 reference pairs");
    std::set<double> distinct;
    for (const auto& p : pairs) distinct.insert(p.t_ref);
    if (distinct.size() < 2)
        throw InvariantError("calibrate: ill-posed fit, all reference temperatures identical");

    auto objective = [&](const std::vector<double>& x) {
        return calibration_objective(x[0], x[1], initial, pairs);
    };

    const auto fit = nelder_mead(objective, {initial.r1, initial.o}, config);

    CalibrationReport report;
    report.params_before = initial;
    report.params_after = initial;
    report.params_after.r1 = fit.argmin[0];
    report.params_after.o = fit.argmin[1];
    report.iterations = fit.iterations;
    report.converged = fit.converged;
    report.trace = fit.trace;
    detail::fit_quality(report.params_before, pairs, report.rmse_before, report.r2_before);
    detail::fit_quality(report.params_after, pairs, report.rmse_after, report.r2_after);
    return report;
}

// Reads reference pairs from CSV with header "timestamp,dn,t_ref_c".
inline std::vector<ReferencePair> load_reference_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV " + path.string(), 0);
    // tolerate trailing carriage returns from foreign line endings
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != "timestamp,dn,t_ref_c")
        throw ParseError("bad CSV header in " + path.string() + ": expected "
                         "\"timestamp,dn,t_ref_c\", got \"" + line + "\"", 0);
    std::vector<ReferencePair> pairs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string ts, dn_s, t_s;
        if (!std::getline(ss, ts, ',') || !std::getline(ss, dn_s, ',') || !std::getline(ss, t_s))
            throw ParseError("malformed CSV row at line " + std::to_string(line_no) + " in " + path.string(),
                             line_no);
        try {
            ReferencePair p{std::stod(dn_s), std::stod(t_s)};
            if (p.dn < 0.0 || p.dn > 65535.0)
                throw ParseError("dn out of [0,65535] at line " + std::to_string(line_no), line_no);
            pairs.push_back(p);
        } catch (const std::invalid_argument&) {
            throw ParseError("non-numeric CSV field at line " + std::to_string(line_no) + " in " + path.string(),
                             line_no);
        }
    }
    return pairs;
}

} // namespace thermforge
