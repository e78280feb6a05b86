#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "thermforge/errors.hpp"

namespace thermforge {

struct SimplexConfig {
    double tolerance = 1e-6;
    int max_iterations = 2000;
    double reflection = 1.0;  // alpha
    double expansion = 2.0;   // gamma
    double contraction = 0.5; // rho
    double shrink = 0.5;      // sigma
};

inline void check_config(const SimplexConfig& c) {
    if (!(c.tolerance > 0.0)) throw InvariantError("SimplexConfig: tolerance must be > 0");
    if (c.max_iterations < 1) throw InvariantError("SimplexConfig: max_iterations must be >= 1");
    if (!(c.reflection > 0.0)) throw InvariantError("SimplexConfig: reflection must be > 0");
    if (!(c.expansion > 1.0)) throw InvariantError("SimplexConfig: expansion must be > 1");
    if (!(c.contraction > 0.0 && c.contraction < 1.0))
        throw InvariantError("SimplexConfig: contraction must be in (0,1)");
    if (!(c.shrink > 0.0 && c.shrink < 1.0))
        throw InvariantError("SimplexConfig: shrink must be in (0,1)");
}

struct NelderMeadResult {
    std::vector<double> argmin;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<std::pair<int, double>> trace; // (iteration, best value so far)
};

// Derivative-free simplex minimization. The initial simplex perturbs each
// coordinate of the start by 5% (0.00025 absolute when the coordinate is 0).
// Terminates when both the function-value spread and the simplex diameter
// fall below tolerance. Non-finite objective values are treated as +inf so
// the offending vertex is rejected.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                                    const std::vector<double>& start,
                                    const SimplexConfig& config = {}) {
    check_config(config);
    const std::size_t n = start.size();
    if (n < 1) throw InvariantError("nelder_mead: dimension must be >= 1");

    const double inf = std::numeric_limits<double>::infinity();
    auto eval = [&](const std::vector<double>& x) {
        const double v = objective(x);
        return std::isfinite(v) ? v : inf;
    };

    const double f_start = objective(start);
    if (!std::isfinite(f_start))
        throw DomainError("nelder_mead: objective non-finite at start");

    std::vector<std::vector<double>> vertex(n + 1, start);
    std::vector<double> fv(n + 1);
    fv[0] = f_start;
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = vertex[i + 1];
        v[i] = (v[i] != 0.0) ? v[i] * 1.05 : 0.00025;
        fv[i + 1] = eval(v);
    }

    auto order = [&]() {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> v2(n + 1);
        std::vector<double> f2(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            v2[i] = std::move(vertex[idx[i]]);
            f2[i] = fv[idx[i]];
        }
        vertex = std::move(v2);
        fv = std::move(f2);
    };

    auto diameter = [&]() {
        double d = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                d = std::max(d, std::fabs(vertex[i][j] - vertex[0][j]));
        return d;
    };

    NelderMeadResult result;
    int iter = 0;
    order();
    result.trace.emplace_back(0, fv[0]);
    for (; iter < config.max_iterations; ++iter) {
        const double spread = fv[n] - fv[0];
        if (spread < config.tolerance && diameter() < config.tolerance) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += vertex[i][j];
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](const std::vector<double>& from, double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + coef * (from[j] - centroid[j]);
            return p;
        };

        const auto reflected = blend(vertex[n], -config.reflection);
        const double fr = eval(reflected);

        if (fr < fv[0]) {
            const auto expanded = blend(vertex[n], -config.reflection * config.expansion);
            const double fe = eval(expanded);
            if (fe < fr) {
                vertex[n] = expanded;
                fv[n] = fe;
            } else {
                vertex[n] = reflected;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            vertex[n] = reflected;
            fv[n] = fr;
        } else if (fr < fv[n]) {
            const auto contracted = blend(reflected, config.contraction);
            const double fc = eval(contracted);
            if (fc <= fr) {
                vertex[n] = contracted;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        vertex[i][j] = vertex[0][j] + config.shrink * (vertex[i][j] - vertex[0][j]);
                    fv[i] = eval(vertex[i]);
                }
            }
        } else {
            const auto contracted = blend(vertex[n], config.contraction);
            const double fc = eval(contracted);
            if (fc < fv[n]) {
                vertex[n] = contracted;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        vertex[i][j] = vertex[0][j] + config.shrink * (vertex[i][j] - vertex[0][j]);
                    fv[i] = eval(vertex[i]);
                }
            }
        }
        order();
        result.trace.emplace_back(iter + 1, fv[0]);
    }

    result.argmin = vertex[0];
    result.value = fv[0];
    result.iterations = iter;
    return result;
}

} // namespace thermforge
