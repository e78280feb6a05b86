// Acceptance suite: one pass/fail line per criterion, each with a pinned
// tolerance and runtime budget. Exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "thermforge/thermforge.hpp"

using namespace thermforge;

namespace {

struct Criterion {
    std::string name;
    double limit_ms;
    std::function<bool(std::string&)> body;
};

bool g_all_ok = true;

void run_criterion(int index, const Criterion& c) {
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
        ok = c.body(detail);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (ms >= c.limit_ms) {
        ok = false;
        detail += (detail.empty() ? "" : "; ") + std::string("runtime budget exceeded");
    }
    std::printf("%s [%d] %s (%.2f ms%s)%s%s\n", ok ? "PASS" : "FAIL", index, c.name.c_str(), ms,
                ms >= c.limit_ms ? ", over budget" : "", detail.empty() ? "" : " -- ",
                detail.c_str());
    if (!ok) g_all_ok = false;
}

// direct two-pass zero-mean NCC, independent of the library routine
double ncc_oracle(const GrayImage& search, const GrayImage& templ, int ox, int oy) {
    const double n = static_cast<double>(templ.width) * templ.height;
    double tm = 0.0, sm = 0.0;
    for (int y = 0; y < templ.height; ++y)
        for (int x = 0; x < templ.width; ++x) {
            tm += templ.at(x, y);
            sm += search.at(ox + x, oy + y);
        }
    tm /= n;
    sm /= n;
    double num = 0.0, dt = 0.0, ds = 0.0;
    for (int y = 0; y < templ.height; ++y)
        for (int x = 0; x < templ.width; ++x) {
            const double a = templ.at(x, y) - tm;
            const double b = search.at(ox + x, oy + y) - sm;
            num += a * b;
            dt += a * a;
            ds += b * b;
        }
    if (dt <= 0.0 || ds <= 0.0) return 0.0;
    return num / std::sqrt(dt * ds);
}

GrayImage random_gray(Rng& rng, int w, int h) {
    GrayImage img(w, h);
    for (auto& v : img.values) v = rng.uniform(0.0, 255.0);
    return img;
}

} // namespace

int main() {
    const auto factory = flir_one_pro_factory();
    const auto lab = flir_one_pro_lab_calibrated();

    std::vector<Criterion> criteria;

    criteria.push_back({"high-end cross-check: factory readout 12-22 degC low at the boiling point",
                        1.0, [&](std::string& detail) {
        const double dn100 = dn_of_temperature(100.0, lab);
        const double readout = temperature_of_dn(dn100, factory);
        std::ostringstream os;
        os << "factory readout " << readout << " degC at dn " << dn100;
        detail = os.str();
        return readout >= 78.0 && readout <= 88.0;
    }});

    criteria.push_back({"low-end cross-check: factory readout at least 2 degC high for 5..25 degC",
                        1.0, [&](std::string& detail) {
        double worst = 1e9;
        for (int t = 5; t <= 25; ++t) {
            const double margin = temperature_of_dn(dn_of_temperature(t, lab), factory) - t;
            worst = std::min(worst, margin);
        }
        detail = "smallest margin " + std::to_string(worst) + " degC";
        return worst >= 2.0;
    }});

    criteria.push_back({"calibration recovery: 0.1% on noiseless pairs, rmse <= 0.6 degC with noise",
                        1000.0, [&](std::string& detail) {
        SimplexConfig simplex;
        simplex.tolerance = 1e-6;
        const auto noiseless = generate_reference_pairs(lab, 50, 4.0, 100.0, 0.0, Rng(1));
        const auto clean = calibrate(noiseless, factory, simplex);
        const double r1_err = std::fabs(clean.params_after.r1 - lab.r1) / std::fabs(lab.r1);
        const double o_err = std::fabs(clean.params_after.o - lab.o) / std::fabs(lab.o);

        const auto noisy = generate_reference_pairs(lab, 97, 4.0, 100.0, 0.5, Rng(2).derive("noise"));
        const auto fit = calibrate(noisy, factory, simplex);
        std::ostringstream os;
        os << "r1 err " << r1_err * 100 << "%, o err " << o_err * 100 << "%, noisy rmse "
           << fit.rmse_after << " degC";
        detail = os.str();
        return clean.converged && r1_err <= 0.001 && o_err <= 0.001 && fit.rmse_after <= 0.6;
    }});

    criteria.push_back({"ncc oracle equivalence on 200 random instances", 10000.0,
                        [&](std::string& detail) {
        Rng rng(3);
        double worst = 0.0;
        const std::vector<double> scales{0.8, 1.0, 1.2};
        for (int trial = 0; trial < 200; ++trial) {
            const GrayImage search = random_gray(rng, 16, 16);
            const GrayImage templ = random_gray(rng, 5, 5);
            const GrayImage map = ncc_map(search, templ);
            for (int y = 0; y < map.height; ++y)
                for (int x = 0; x < map.width; ++x) {
                    const double err = std::fabs(map.at(x, y) - ncc_oracle(search, templ, x, y));
                    worst = std::max(worst, err);
                    if (err > 1e-10) return false;
                }
            // best_match equals exhaustive search over (scale, x, y)
            MatchResult expected;
            bool have = false;
            for (double s : scales) {
                const auto [tw, th] = scaled_dims(templ.width, templ.height, s);
                if (tw > search.width || th > search.height) continue;
                const GrayImage resized =
                    (tw == templ.width && th == templ.height) ? templ : resize_bilinear(templ, tw, th);
                const GrayImage m = ncc_map(search, resized);
                for (int y = 0; y < m.height; ++y)
                    for (int x = 0; x < m.width; ++x)
                        if (!have || m.at(x, y) > expected.score) {
                            expected = {x, y, s, m.at(x, y), false};
                            have = true;
                        }
            }
            const MatchResult got = best_match(search, templ, scales, 0.75);
            if (got.x_star != expected.x_star || got.y_star != expected.y_star ||
                got.scale != expected.scale || std::fabs(got.score - expected.score) > 1e-12)
                return false;
        }
        detail = "max |ncc - oracle| " + std::to_string(worst);
        return true;
    }});

    criteria.push_back({"pairing pipeline: 20/20 exact offsets, 5/5 decoys rejected", 30000.0,
                        [&](std::string& detail) {
        helpers::TempDir tmp("acceptance_pair");
        PipelineConfig cfg;
        cfg.seed = 42;
        if (run_synth(cfg, tmp.path() / "corpus", 20, 5) != kExitOk) return false;
        if (run_pair(tmp.path() / "corpus" / "lo", tmp.path() / "corpus" / "hi",
                     tmp.path() / "corpus" / "rgb", cfg, tmp.path() / "paired") != kExitOk)
            return false;

        const json manifest = load_json_file(tmp.path() / "corpus" / "manifest.json");
        const json pairs = load_json_file(tmp.path() / "paired" / "pairs.json");
        std::map<std::string, json> accepted;
        for (const auto& p : pairs.at("pairs")) accepted[p.at("id").get<std::string>()] = p;

        int exact = 0, rejected_decoys = 0;
        for (const auto& scene : manifest.at("scenes")) {
            const std::string id =
                thermforge::detail::timestamp_name(scene.at("timestamp_hi").get<double>());
            if (scene.at("decoy").get<bool>()) {
                if (!accepted.contains(id)) ++rejected_decoys;
                continue;
            }
            if (!accepted.contains(id)) continue;
            const auto& m = accepted[id].at("match");
            if (m.at("x").get<int>() == scene.at("true_dx").get<int>() &&
                m.at("y").get<int>() == scene.at("true_dy").get<int>())
                ++exact;
        }
        detail = std::to_string(exact) + "/20 exact offsets, " + std::to_string(rejected_decoys) +
                 "/5 decoys rejected";
        return exact == 20 && rejected_decoys == 5;
    }});

    criteria.push_back({"enhancement ordering: guided rmse wins >= 90%, edges never wider", 120000.0,
                        [&](std::string& detail) {
        helpers::TempDir tmp("acceptance_enhance");
        PipelineConfig cfg;
        cfg.seed = 7;
        if (run_synth(cfg, tmp.path() / "corpus", 50, 0) != kExitOk) return false;
        if (run_enhance(tmp.path() / "corpus", cfg, tmp.path() / "out") != kExitOk) return false;

        const json summary = load_json_file(tmp.path() / "out" / "enhance.json");
        const double wins = summary.at("guided_win_fraction").get<double>();
        if (summary.at("processed").get<int>() != 50) return false;

        const json manifest = load_json_file(tmp.path() / "corpus" / "manifest.json");
        int edges_checked = 0;
        bool edges_ok = true;
        for (const auto& scene : manifest.at("scenes")) {
            if (scene.at("kind").get<std::string>() != "step_edge") continue;
            const std::string id =
                thermforge::detail::timestamp_name(scene.at("timestamp_hi").get<double>());
            const auto guided = load_temperature_map(tmp.path() / "out" / (id + "_guided.pgm"),
                                                     tmp.path() / "out" / (id + "_guided.json"));
            const auto bilinear = load_temperature_map(tmp.path() / "out" / (id + "_bilinear.pgm"),
                                                       tmp.path() / "out" / (id + "_bilinear.json"));
            const int edge_x = scene.at("edge_column_hi").get<int>();
            const double wg = helpers::edge_width_10_90(to_gray(guided.map), edge_x);
            const double wb = helpers::edge_width_10_90(to_gray(bilinear.map), edge_x);
            ++edges_checked;
            if (wg > wb) edges_ok = false;
        }
        std::ostringstream os;
        os << "win fraction " << wins << ", " << edges_checked << " edge scenes checked";
        detail = os.str();
        return wins >= 0.9 && edges_checked == 10 && edges_ok;
    }});

    criteria.push_back({"loss-formula suite: analytic cases and 1e-12 oracle agreement", 1000.0,
                        [&](std::string& detail) {
        Rng rng(11);
        GrayImage a(8, 6), b(8, 6);
        for (auto& v : a.values) v = rng.uniform(0.0, 100.0);
        for (auto& v : b.values) v = rng.uniform(0.0, 100.0);

        if (std::fabs(adversarial_loss(0.5) - std::log(2.0)) > 1e-15) return false;
        if (adversarial_loss(1.0) != 0.0) return false;
        if (std::fabs(adversarial_loss(std::exp(-2.0)) - 2.0) > 1e-12) return false;

        GrayImage plus2 = a;
        for (auto& v : plus2.values) v += 2.0;
        if (std::fabs(cycle_consistency_loss(a, plus2) - 2.0) > 1e-12) return false;
        if (std::fabs(identity_loss(a, plus2) - 4.0) > 1e-12) return false;
        GrayImage plus3 = a;
        for (auto& v : plus3.values) v += 3.0;
        if (std::fabs(mse_loss(a, plus3) - 9.0) > 1e-12) return false;
        if (std::fabs(total_loss(1, 1, 1, 1, 1, LossWeights{0.1}) - 4.1) > 1e-12) return false;

        double l1 = 0.0, l2 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            l1 += std::fabs(a.values[i] - b.values[i]);
            l2 += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
        }
        l1 /= static_cast<double>(a.size());
        l2 /= static_cast<double>(a.size());
        if (std::fabs(cycle_consistency_loss(a, b) - l1) > 1e-12) return false;
        if (std::fabs(identity_loss(a, b) - l2) > 1e-12) return false;
        if (std::fabs(mse_loss(a, b) - l2) > 1e-12) return false;

        const FeatureGrid fa = edge_feature_bank(a), fb = edge_feature_bank(b);
        double fsum = 0.0;
        std::size_t fn = 0;
        for (std::size_t c = 0; c < fa.size(); ++c)
            for (std::size_t i = 0; i < fa[c].size(); ++i) {
                const double d = fa[c].values[i] - fb[c].values[i];
                fsum += d * d;
                ++fn;
            }
        if (std::fabs(content_loss(fa, fb) - fsum / static_cast<double>(fn)) > 1e-12) return false;
        detail = "all analytic and oracle checks within tolerance";
        return true;
    }});

    criteria.push_back({"metric identities and 1e-10 oracle equivalence", 5000.0,
                        [&](std::string& detail) {
        Rng rng(12);
        const GrayImage a = random_gray(rng, 16, 16);
        GrayImage b = a;
        for (auto& v : b.values) v += rng.uniform(-10.0, 10.0);

        TemperatureMap ma(16, 16), mb(16, 16);
        ma.celsius = a.values;
        mb.celsius = b.values;
        std::fill(ma.valid.begin(), ma.valid.end(), std::uint8_t{1});
        std::fill(mb.valid.begin(), mb.valid.end(), std::uint8_t{1});

        if (rmse_celsius(ma, ma) != 0.0) return false;
        if (std::fabs(ssim(a, a, 255.0) - 1.0) > 1e-12) return false;
        const std::vector<double> ref{1.0, 2.0, 5.0};
        if (std::fabs(r_squared(ref, ref) - 1.0) > 1e-15) return false;

        // psnr strictly monotone in mse
        double prev = std::numeric_limits<double>::infinity();
        for (double step : {0.5, 1.5, 4.0, 9.0}) {
            GrayImage shifted = a;
            for (auto& v : shifted.values) v += step;
            const double p = psnr(a, shifted, 255.0);
            if (p >= prev) return false;
            prev = p;
        }

        // oracle equivalence on the random pair
        double se = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            se += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
        const double mse_direct = se / static_cast<double>(a.size());
        if (std::fabs(rmse_celsius(ma, mb) - std::sqrt(mse_direct)) > 1e-10) return false;
        if (std::fabs(psnr(a, b, 255.0) - 10.0 * std::log10(255.0 * 255.0 / mse_direct)) > 1e-10)
            return false;

        // windowed ssim against a direct evaluation
        const auto& w = thermforge::detail::ssim_window();
        const double c1 = 6.5025, c2 = 58.5225; // (0.01*255)^2, (0.03*255)^2
        double total = 0.0;
        int count = 0;
        for (int cy = 5; cy < 11; ++cy)
            for (int cx = 5; cx < 11; ++cx) {
                double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                for (int dy = -5; dy <= 5; ++dy)
                    for (int dx = -5; dx <= 5; ++dx) {
                        const double wt = w[static_cast<std::size_t>((dy + 5) * 11 + dx + 5)];
                        mu_a += wt * a.at(cx + dx, cy + dy);
                        mu_b += wt * b.at(cx + dx, cy + dy);
                        aa += wt * a.at(cx + dx, cy + dy) * a.at(cx + dx, cy + dy);
                        bb += wt * b.at(cx + dx, cy + dy) * b.at(cx + dx, cy + dy);
                        ab += wt * a.at(cx + dx, cy + dy) * b.at(cx + dx, cy + dy);
                    }
                total += ((2 * mu_a * mu_b + c1) * (2 * (ab - mu_a * mu_b) + c2)) /
                         ((mu_a * mu_a + mu_b * mu_b + c1) *
                          ((aa - mu_a * mu_a) + (bb - mu_b * mu_b) + c2));
                ++count;
            }
        if (std::fabs(ssim(a, b, 255.0) - total / count) > 1e-10) return false;
        detail = "identities hold, oracles agree";
        return true;
    }});

    criteria.push_back({"round trips: model inverse within 1e-9 degC, codecs bit-exact x1000", 10000.0,
                        [&](std::string& detail) {
        double worst = 0.0;
        for (double t = -20.0; t <= 120.0; t += 0.01) {
            const double back = temperature_of_dn(dn_of_temperature(t, lab), lab);
            worst = std::max(worst, std::fabs(back - t));
            if (worst > 1e-9) return false;
        }

        helpers::TempDir tmp("acceptance_codec");
        Rng rng(13);
        for (int i = 0; i < 500; ++i) {
            const int w = rng.uniform_int(1, 24), h = rng.uniform_int(1, 24);
            const ThermalFrame f = helpers::random_frame(rng, w, h);
            const auto path = tmp.path() / "f.pgm";
            save_pgm16(f, path);
            const ThermalFrame back = load_pgm16(path);
            if (back.dn != f.dn || back.width != f.width || back.height != f.height) return false;
        }
        for (int i = 0; i < 500; ++i) {
            const int w = rng.uniform_int(1, 24), h = rng.uniform_int(1, 24);
            const RgbFrame f = helpers::random_rgb(rng, w, h);
            const auto path = tmp.path() / "f.ppm";
            save_ppm(f, path);
            const RgbFrame back = load_ppm(path);
            if (back.rgb != f.rgb || back.width != f.width || back.height != f.height) return false;
        }
        detail = "max round-trip error " + std::to_string(worst) + " degC, 1000 codec round trips";
        return true;
    }});

    for (std::size_t i = 0; i < criteria.size(); ++i)
        run_criterion(static_cast<int>(i + 1), criteria[i]);

    std::printf("%s\n", g_all_ok ? "ACCEPTANCE: all criteria passed" : "ACCEPTANCE: FAILURES present");
    return g_all_ok ? 0 : 1;
}
