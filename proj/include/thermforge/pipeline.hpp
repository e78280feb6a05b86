#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "thermforge/calibrate.hpp"
#include "thermforge/enhance.hpp"
#include "thermforge/matching.hpp"
#include "thermforge/metrics.hpp"
#include "thermforge/pnm.hpp"
#include "thermforge/radiometry.hpp"
#include "thermforge/serialize.hpp"
#include "thermforge/synthetic.hpp"

// Batch orchestration behind the CLI subcommands. Exit-status contract:
// 0 success, 1 input/configuration error, 2 completed with failures.

namespace thermforge {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitCompletedWithFailures = 2;

inline std::vector<double> default_scales(double nominal = 0.25) {
    std::vector<double> scales;
    for (int i = 0; i < 9; ++i) scales.push_back(nominal * (0.9 + 0.025 * i));
    return scales;
}

struct PipelineConfig {
    std::string params_path;
    MeasuringRange range;
    double ncc_threshold = 0.75;
    std::vector<double> scales = default_scales();
    int padding = 4;
    GuidedSrConfig sr;
    LossWeights weights;
    std::uint64_t seed = 0;
    int align_radius = 10;    // thermal pixels
    double pair_window_s = 0.5;
    int threads = 1;
};

inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    if (j.contains("params_path")) c.params_path = j.at("params_path").get<std::string>();
    if (j.contains("range")) c.range = range_from_json(j.at("range"));
    if (j.contains("ncc_threshold")) c.ncc_threshold = j.at("ncc_threshold").get<double>();
    if (j.contains("scales")) c.scales = j.at("scales").get<std::vector<double>>();
    if (j.contains("padding")) c.padding = j.at("padding").get<int>();
    if (j.contains("sr")) {
        const auto& s = j.at("sr");
        if (s.contains("factor")) c.sr.factor = s.at("factor").get<int>();
        c.sr.radius = s.contains("radius") ? s.at("radius").get<int>() : c.sr.factor;
        if (s.contains("epsilon")) c.sr.epsilon = s.at("epsilon").get<double>();
    }
    if (j.contains("weights")) c.weights.alpha = j.at("weights").at("alpha").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("align_radius")) c.align_radius = j.at("align_radius").get<int>();
    if (j.contains("pair_window_s")) c.pair_window_s = j.at("pair_window_s").get<double>();
    if (!(c.ncc_threshold > 0.0 && c.ncc_threshold <= 1.0))
        throw InvariantError("config: ncc_threshold must be in (0,1]");
    if (c.scales.empty()) throw InvariantError("config: scales must be non-empty");
    return c;
}

inline PipelineConfig load_config(const std::optional<fs::path>& path) {
    if (!path) return PipelineConfig{};
    return config_from_json(load_json_file(*path));
}

namespace detail {

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

inline std::string timestamp_name(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%013.6f", t);
    return buf;
}

struct StampedFile {
    double timestamp;
    fs::path path;
};

inline std::vector<StampedFile> list_stamped(const fs::path& dir, const std::string& ext) {
    std::vector<StampedFile> files;
    if (!fs::exists(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ext) continue;
        try {
            files.push_back({std::stod(entry.path().stem().string()), entry.path()});
        } catch (const std::exception&) {
            std::cerr << "warning: skipping non-timestamp file " << entry.path() << "\n";
        }
    }
    std::sort(files.begin(), files.end(), [](const StampedFile& a, const StampedFile& b) {
        return a.timestamp < b.timestamp;
    });
    return files;
}

// GrayImage in degC from a DN frame, invalid pixels filled with the mean of
// the valid ones so resampling has no holes.
inline GrayImage celsius_image(const ThermalFrame& frame, const RadiometricParams& params,
                               const MeasuringRange& range) {
    const TemperatureMap map = convert_frame(frame, params, range);
    if (map.all_invalid) throw DomainError("frame " + frame.capture_id + " has no convertible pixels");
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < map.celsius.size(); ++i)
        if (map.valid[i]) {
            mean += map.celsius[i];
            ++n;
        }
    mean /= static_cast<double>(n);
    return to_gray(map, mean);
}

inline TemperatureMap map_from_gray(const GrayImage& img) {
    TemperatureMap map(img.width, img.height);
    map.celsius = img.values;
    std::fill(map.valid.begin(), map.valid.end(), std::uint8_t{1});
    return map;
}

inline ThermalFrame crop_frame(const ThermalFrame& frame, const Rect& r) {
    ThermalFrame out;
    out.width = r.w;
    out.height = r.h;
    out.capture_id = frame.capture_id;
    out.timestamp = frame.timestamp;
    out.dn.resize(static_cast<std::size_t>(r.w) * r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            out.dn[static_cast<std::size_t>(y) * r.w + x] = frame.at(r.x + x, r.y + y);
    return out;
}

inline RgbFrame crop_frame(const RgbFrame& frame, const Rect& r) {
    RgbFrame out;
    out.width = r.w;
    out.height = r.h;
    out.capture_id = frame.capture_id;
    out.rgb.resize(3 * static_cast<std::size_t>(r.w) * r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) {
            const std::uint8_t* src = frame.pixel(r.x + x, r.y + y);
            std::uint8_t* dst = out.rgb.data() + 3 * (static_cast<std::size_t>(y) * r.w + x);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    return out;
}

} // namespace detail

// --- calibrate ---

inline int run_calibrate(const fs::path& log_csv, const fs::path& initial_params_json,
                         const fs::path& out_report_json, double tolerance = 1e-6,
                         int max_iterations = 2000) {
    try {
        const auto pairs = load_reference_csv(log_csv);
        const auto initial = params_from_json(load_json_file(initial_params_json));
        SimplexConfig config;
        config.tolerance = tolerance;
        config.max_iterations = max_iterations;
        const auto report = calibrate(pairs, initial, config);
        save_json_file(to_json(report), out_report_json);
        std::cout << "calibrate: rmse " << report.rmse_before << " -> " << report.rmse_after
                  << " degC over " << pairs.size() << " pairs, "
                  << (report.converged ? "converged" : "not converged") << " in "
                  << report.iterations << " iterations\n";
        return report.converged ? kExitOk : kExitCompletedWithFailures;
    } catch (const std::exception& e) {
        std::cerr << "calibrate: error: " << e.what() << "\n";
        return kExitInputError;
    }
}

// --- convert ---

inline int run_convert(const fs::path& frame_pgm, const fs::path& params_json, const fs::path& out_pgm,
                       const fs::path& out_sidecar_json, const MeasuringRange& range = {}) {
    try {
        const ThermalFrame frame = load_pgm16(frame_pgm);
        const auto params = params_from_json(load_json_file(params_json));
        const TemperatureMap map = convert_frame(frame, params, range);

        std::size_t out_of_domain = 0, out_of_range = 0;
        for (std::size_t i = 0; i < frame.dn.size(); ++i) {
            if (map.valid[i]) continue;
            if (!dn_in_domain(frame.dn[i], params))
                ++out_of_domain;
            else
                ++out_of_range;
        }
        save_temperature_map(map, range, out_pgm, out_sidecar_json);
        json sidecar = load_json_file(out_sidecar_json);
        sidecar["conversion"] = {{"out_of_domain", out_of_domain},
                                 {"out_of_range", out_of_range},
                                 {"all_invalid", map.all_invalid},
                                 {"source", frame_pgm.string()},
                                 {"params", to_json(params)}};
        save_json_file(sidecar, out_sidecar_json);
        if (map.all_invalid) std::cerr << "convert: warning: no convertible pixels\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "convert: error: " << e.what() << "\n";
        return kExitInputError;
    }
}

// --- synth ---

// Writes a reproducible corpus: lo/hi DN frames and an RGB guide per scene,
// affine-encoded ground truth, a water-bath reference CSV, and a manifest
// carrying every scene's true embedding. Every fifth scene is a step-edge
// scene; `decoys` extra unrelated lo/hi pairs are appended for rejection
// tests.
inline int run_synth(const PipelineConfig& config, const fs::path& out_dir, int count, int decoys = 0) {
    try {
        if (count < 0 || decoys < 0) throw InvariantError("synth: count and decoys must be >= 0");
        const SyntheticConfig scfg; // defaults; params below
        fs::create_directories(out_dir / "lo");
        fs::create_directories(out_dir / "hi");
        fs::create_directories(out_dir / "rgb");
        fs::create_directories(out_dir / "truth");

        Rng root(config.seed);
        json scenes = json::array();

        auto write_scene = [&](const SyntheticScene& scene, double t_lo, double t_hi, bool decoy_lo,
                               const SyntheticScene* hi_source) {
            const std::string lo_name = detail::timestamp_name(t_lo);
            const std::string hi_name = detail::timestamp_name(t_hi);
            ThermalFrame lo = scene.thermal_lo;
            lo.capture_id = lo_name;
            lo.timestamp = t_lo;
            save_pgm16(lo, out_dir / "lo" / (lo_name + ".pgm"));

            const SyntheticScene& hi_scene = hi_source ? *hi_source : scene;
            ThermalFrame hi;
            hi.width = hi_scene.truth_hi.width;
            hi.height = hi_scene.truth_hi.height;
            hi.capture_id = hi_name;
            hi.timestamp = t_hi;
            hi.dn.resize(hi_scene.truth_hi.celsius.size());
            for (std::size_t i = 0; i < hi.dn.size(); ++i)
                hi.dn[i] = static_cast<std::uint16_t>(std::clamp(
                    std::llround(dn_of_temperature(hi_scene.truth_hi.celsius[i], scfg.params)), 0ll,
                    65535ll));
            save_pgm16(hi, out_dir / "hi" / (hi_name + ".pgm"));

            RgbFrame rgb = scene.rgb;
            rgb.capture_id = lo_name;
            save_ppm(rgb, out_dir / "rgb" / (lo_name + ".ppm"));

            save_temperature_map(hi_scene.truth_hi, config.range, out_dir / "truth" / (hi_name + ".pgm"),
                                 out_dir / "truth" / (hi_name + ".json"));

            scenes.push_back(json{{"timestamp_lo", t_lo},
                                  {"timestamp_hi", t_hi},
                                  {"lo", "lo/" + lo_name + ".pgm"},
                                  {"hi", "hi/" + hi_name + ".pgm"},
                                  {"rgb", "rgb/" + lo_name + ".ppm"},
                                  {"truth_pgm", "truth/" + hi_name + ".pgm"},
                                  {"truth_sidecar", "truth/" + hi_name + ".json"},
                                  {"true_dx", scene.true_dx},
                                  {"true_dy", scene.true_dy},
                                  {"true_scale", scene.true_scale},
                                  {"kind", scene.kind == SceneKind::step_edge ? "step_edge" : "field"},
                                  {"edge_column_hi", scene.edge_column_hi},
                                  {"region_width", SyntheticConfig{}.region_width},
                                  {"region_height", SyntheticConfig{}.region_height},
                                  {"factor", SyntheticConfig{}.factor},
                                  {"decoy", decoy_lo}});
        };

        for (int i = 0; i < count; ++i) {
            const SceneKind kind = (i % 5 == 4) ? SceneKind::step_edge : SceneKind::field;
            const SyntheticScene scene = generate_scene(root.derive("scene").derive(static_cast<std::uint64_t>(i)), scfg, kind);
            const double t = 10.0 + 2.0 * i;
            write_scene(scene, t, t + 0.12, false, nullptr);
        }
        for (int j = 0; j < decoys; ++j) {
            const SyntheticScene lo_world =
                generate_scene(root.derive("decoy_lo").derive(static_cast<std::uint64_t>(j)), scfg);
            const SyntheticScene hi_world =
                generate_scene(root.derive("decoy_hi").derive(static_cast<std::uint64_t>(j)), scfg);
            const double t = 1000.0 + 2.0 * j;
            write_scene(lo_world, t, t + 0.12, true, &hi_world);
        }

        // reference water-bath sweep for the calibrate command
        {
            auto pairs = generate_reference_pairs(scfg.params, 97, 4.0, 100.0, 0.5, root.derive("waterbath"));
            std::ofstream csv(out_dir / "waterbath.csv");
            if (!csv) throw IoError("cannot write " + (out_dir / "waterbath.csv").string());
            csv << "timestamp,dn,t_ref_c\n";
            for (std::size_t i = 0; i < pairs.size(); ++i)
                csv << i << "," << std::llround(pairs[i].dn) << "," << pairs[i].t_ref << "\n";
        }

        json manifest{{"seed", config.seed},
                      {"count", count},
                      {"decoys", decoys},
                      {"params", to_json(scfg.params)},
                      {"range", to_json(config.range)},
                      {"noise_equivalent_c", scfg.noise_equivalent_c},
                      {"optical_blur_sigma", scfg.optical_blur_sigma},
                      {"forward_model",
                       "truth = blur(world); lo = quantize(area_downsample(dn(truth) + noise))"},
                      {"scenes", scenes}};
        save_json_file(manifest, out_dir / "manifest.json");
        std::cout << "synth: wrote " << count << " scenes and " << decoys << " decoys to " << out_dir
                  << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "synth: error: " << e.what() << "\n";
        return kExitInputError;
    }
}

// --- pair ---

struct PairRecord {
    std::string id;
    double timestamp_lo = 0.0;
    double timestamp_hi = 0.0;
    MatchResult match;
    CropSpec crops;
    bool has_rgb = false;
};

inline int run_pair(const fs::path& lo_dir, const fs::path& hi_dir, const fs::path& rgb_dir,
                    const PipelineConfig& config, const fs::path& out_dir) {
    try {
        const auto lo_files = detail::list_stamped(lo_dir, ".pgm");
        const auto hi_files = detail::list_stamped(hi_dir, ".pgm");
        const auto rgb_files = detail::list_stamped(rgb_dir, ".ppm");
        if (lo_files.empty() || hi_files.empty())
            throw InvariantError("pair: empty input directory " +
                                 (lo_files.empty() ? lo_dir : hi_dir).string());
        if (rgb_files.empty())
            std::cerr << "pair: warning: no RGB frames, producing thermal-only crops\n";

        // nearest unused lo frame within the window, greedy in hi order
        std::vector<bool> lo_used(lo_files.size(), false);
        struct Candidate {
            std::size_t hi_idx;
            std::size_t lo_idx;
            std::ptrdiff_t rgb_idx; // -1 when absent
        };
        std::vector<Candidate> candidates;
        for (std::size_t h = 0; h < hi_files.size(); ++h) {
            std::ptrdiff_t best = -1;
            double best_dt = config.pair_window_s;
            for (std::size_t l = 0; l < lo_files.size(); ++l) {
                if (lo_used[l]) continue;
                const double dt = std::fabs(lo_files[l].timestamp - hi_files[h].timestamp);
                if (dt <= best_dt) {
                    best_dt = dt;
                    best = static_cast<std::ptrdiff_t>(l);
                }
            }
            if (best < 0) continue;
            lo_used[static_cast<std::size_t>(best)] = true;
            std::ptrdiff_t rgb_best = -1;
            double rgb_dt = config.pair_window_s;
            for (std::size_t r = 0; r < rgb_files.size(); ++r) {
                const double dt = std::fabs(rgb_files[r].timestamp -
                                            lo_files[static_cast<std::size_t>(best)].timestamp);
                if (dt <= rgb_dt) {
                    rgb_dt = dt;
                    rgb_best = static_cast<std::ptrdiff_t>(r);
                }
            }
            candidates.push_back({h, static_cast<std::size_t>(best), rgb_best});
        }

        fs::create_directories(out_dir / "lo");
        fs::create_directories(out_dir / "hi");
        fs::create_directories(out_dir / "rgb");
        fs::create_directories(out_dir / "match");

        std::vector<PairRecord> records(candidates.size());
        std::vector<std::string> errors(candidates.size());
        detail::parallel_for(candidates.size(), config.threads, [&](std::size_t i) {
            const auto& c = candidates[i];
            try {
                const ThermalFrame lo = load_pgm16(lo_files[c.lo_idx].path);
                const ThermalFrame hi = load_pgm16(hi_files[c.hi_idx].path);
                PairRecord rec;
                rec.id = detail::timestamp_name(hi_files[c.hi_idx].timestamp);
                rec.timestamp_lo = lo_files[c.lo_idx].timestamp;
                rec.timestamp_hi = hi_files[c.hi_idx].timestamp;
                rec.match = best_match(dn_to_gray(lo), dn_to_gray(hi), config.scales, config.ncc_threshold);
                if (rec.match.accepted) {
                    std::optional<RgbFrame> rgb;
                    if (c.rgb_idx >= 0) rgb = load_ppm(rgb_files[static_cast<std::size_t>(c.rgb_idx)].path);
                    rec.crops = derive_crops(rec.match, lo.width, lo.height, hi.width, hi.height,
                                             rgb ? rgb->width : lo.width, rgb ? rgb->height : lo.height,
                                             config.padding);
                    save_pgm16(detail::crop_frame(lo, rec.crops.rect_lo), out_dir / "lo" / (rec.id + ".pgm"));
                    save_pgm16(detail::crop_frame(hi, rec.crops.rect_hi), out_dir / "hi" / (rec.id + ".pgm"));
                    if (rgb) {
                        save_ppm(detail::crop_frame(*rgb, rec.crops.rect_rgb),
                                 out_dir / "rgb" / (rec.id + ".ppm"));
                        rec.has_rgb = true;
                    }
                    json match_json{{"match", to_json(rec.match)},
                                    {"crops", to_json(rec.crops)},
                                    {"lo", lo_files[c.lo_idx].path.string()},
                                    {"hi", hi_files[c.hi_idx].path.string()}};
                    save_json_file(match_json, out_dir / "match" / (rec.id + ".json"));
                }
                records[i] = std::move(rec);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        });

        json accepted = json::array(), rejected = json::array();
        std::size_t n_accepted = 0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!errors[i].empty()) {
                rejected.push_back(json{{"id", records[i].id}, {"error", errors[i]}});
                continue;
            }
            const auto& rec = records[i];
            json entry{{"id", rec.id},
                       {"timestamp_lo", rec.timestamp_lo},
                       {"timestamp_hi", rec.timestamp_hi},
                       {"match", to_json(rec.match)}};
            if (rec.match.accepted) {
                entry["crops"] = to_json(rec.crops);
                entry["lo"] = "lo/" + rec.id + ".pgm";
                entry["hi"] = "hi/" + rec.id + ".pgm";
                if (rec.has_rgb) entry["rgb"] = "rgb/" + rec.id + ".ppm";
                accepted.push_back(entry);
                ++n_accepted;
            } else {
                rejected.push_back(entry);
            }
        }
        const json summary{{"threshold", config.ncc_threshold},
                           {"window_s", config.pair_window_s},
                           {"scales", config.scales},
                           {"padding", config.padding},
                           {"candidates", candidates.size()},
                           {"accepted_count", n_accepted},
                           {"acceptance_rate",
                            candidates.empty() ? 0.0
                                               : static_cast<double>(n_accepted) /
                                                     static_cast<double>(candidates.size())},
                           {"pairs", accepted},
                           {"rejected", rejected}};
        save_json_file(summary, out_dir / "pairs.json");
        std::cout << "pair: accepted " << n_accepted << "/" << candidates.size() << " candidate pairs\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "pair: error: " << e.what() << "\n";
        return kExitInputError;
    }
}

// --- enhance ---

struct EnhanceEntry {
    std::string id;
    fs::path lo_pgm;
    fs::path rgb_ppm;       // empty when absent
    fs::path truth_pgm;     // empty when absent
    fs::path truth_sidecar;
    Rect lo_rect;           // crop applied to the lo frame (synth layout); w==0 -> whole frame
    Rect rgb_rect;
};

namespace detail {

inline std::vector<EnhanceEntry> enhance_entries(const fs::path& pair_dir) {
    std::vector<EnhanceEntry> entries;
    if (fs::exists(pair_dir / "manifest.json")) {
        const json manifest = load_json_file(pair_dir / "manifest.json");
        for (const auto& s : manifest.at("scenes")) {
            if (s.at("decoy").get<bool>()) continue;
            EnhanceEntry e;
            e.id = timestamp_name(s.at("timestamp_hi").get<double>());
            e.lo_pgm = pair_dir / s.at("lo").get<std::string>();
            e.rgb_ppm = pair_dir / s.at("rgb").get<std::string>();
            e.truth_pgm = pair_dir / s.at("truth_pgm").get<std::string>();
            e.truth_sidecar = pair_dir / s.at("truth_sidecar").get<std::string>();
            const int q = s.at("factor").get<int>();
            e.lo_rect = Rect{s.at("true_dx").get<int>(), s.at("true_dy").get<int>(),
                             s.at("region_width").get<int>(), s.at("region_height").get<int>()};
            e.rgb_rect = Rect{e.lo_rect.x * q, e.lo_rect.y * q, e.lo_rect.w * q, e.lo_rect.h * q};
            entries.push_back(std::move(e));
        }
        return entries;
    }
    if (fs::exists(pair_dir / "pairs.json")) {
        const json summary = load_json_file(pair_dir / "pairs.json");
        for (const auto& p : summary.at("pairs")) {
            EnhanceEntry e;
            e.id = p.at("id").get<std::string>();
            e.lo_pgm = pair_dir / p.at("lo").get<std::string>();
            if (p.contains("rgb")) e.rgb_ppm = pair_dir / p.at("rgb").get<std::string>();
            entries.push_back(std::move(e));
        }
        return entries;
    }
    throw InvariantError("enhance: no manifest.json or pairs.json in " + pair_dir.string());
}

} // namespace detail

inline int run_enhance(const fs::path& pair_dir, const PipelineConfig& config, const fs::path& out_dir) {
    try {
        const auto entries = detail::enhance_entries(pair_dir);
        if (entries.empty()) throw InvariantError("enhance: no pairs to process");
        RadiometricParams params = flir_one_pro_lab_calibrated();
        if (!config.params_path.empty()) params = params_from_json(load_json_file(config.params_path));
        else if (fs::exists(pair_dir / "manifest.json"))
            params = params_from_json(load_json_file(pair_dir / "manifest.json").at("params"));

        fs::create_directories(out_dir);

        struct Result {
            json record;
            bool skipped = false;
            bool failed = false;
        };
        std::vector<Result> results(entries.size());

        detail::parallel_for(entries.size(), config.threads, [&](std::size_t i) {
            const auto& e = entries[i];
            auto& res = results[i];
            try {
                ThermalFrame lo = load_pgm16(e.lo_pgm);
                if (e.lo_rect.w > 0) lo = detail::crop_frame(lo, e.lo_rect);
                const GrayImage t_lo = detail::celsius_image(lo, params, config.range);
                const GrayImage bilinear = upsample_bilinear(t_lo, config.sr.factor);

                res.record["id"] = e.id;
                save_temperature_map(detail::map_from_gray(bilinear), config.range,
                                     out_dir / (e.id + "_bilinear.pgm"), out_dir / (e.id + "_bilinear.json"));

                GrayImage guided;
                if (!e.rgb_ppm.empty() && fs::exists(e.rgb_ppm)) {
                    RgbFrame rgb = load_ppm(e.rgb_ppm);
                    if (e.rgb_rect.w > 0) rgb = detail::crop_frame(rgb, e.rgb_rect);
                    const AlignedPair aligned =
                        align_guide(rgb, t_lo, config.align_radius, config.ncc_threshold);
                    guided = guided_upsample(t_lo, aligned, config.sr);
                    res.record["offset"] = {aligned.offset_x, aligned.offset_y};
                    res.record["align_score"] = aligned.score;
                    save_temperature_map(detail::map_from_gray(guided), config.range,
                                         out_dir / (e.id + "_guided.pgm"), out_dir / (e.id + "_guided.json"));
                } else {
                    res.record["skipped_reason"] = "no RGB guide";
                    res.skipped = true;
                }

                if (!e.truth_pgm.empty() && fs::exists(e.truth_pgm)) {
                    const auto truth = load_temperature_map(e.truth_pgm, e.truth_sidecar);
                    const double span = truth.range.max_c - truth.range.min_c;
                    const GrayImage truth_gray = to_gray(truth.map);
                    auto metric_block = [&](const GrayImage& candidate) {
                        MetricReport m;
                        m.rmse_c = rmse_celsius(detail::map_from_gray(candidate), truth.map);
                        m.r2 = r_squared(candidate.values, truth.map.celsius);
                        m.psnr_db = psnr(candidate, truth_gray, span);
                        m.ssim = ssim(candidate, truth_gray, span);
                        m.gradient_energy_ratio =
                            gradient_energy(candidate) / gradient_energy(truth_gray);
                        m.n_pixels = candidate.size();
                        return to_json(m);
                    };
                    res.record["metrics_bilinear"] = metric_block(bilinear);
                    if (!res.skipped) {
                        res.record["metrics_guided"] = metric_block(guided);
                        res.record["guided_leq_bilinear"] =
                            res.record["metrics_guided"]["rmse_c"].get<double>() <=
                            res.record["metrics_bilinear"]["rmse_c"].get<double>();
                    }
                }
            } catch (const UnalignedError& ue) {
                res.record["id"] = e.id;
                res.record["skipped_reason"] = "unaligned guide";
                res.record["best_score"] = ue.best_score;
                res.skipped = true;
            } catch (const std::exception& ex) {
                res.record["id"] = e.id;
                res.record["error"] = ex.what();
                res.failed = true;
            }
        });

        json per_pair = json::array();
        std::size_t n_done = 0, n_skipped = 0, n_wins = 0, n_scored = 0;
        double sum_rmse_b = 0.0, sum_rmse_g = 0.0;
        for (const auto& r : results) {
            per_pair.push_back(r.record);
            if (r.skipped || r.failed) {
                ++n_skipped;
                continue;
            }
            ++n_done;
            if (r.record.contains("metrics_guided")) {
                ++n_scored;
                sum_rmse_b += r.record["metrics_bilinear"]["rmse_c"].get<double>();
                sum_rmse_g += r.record["metrics_guided"]["rmse_c"].get<double>();
                if (r.record["guided_leq_bilinear"].get<bool>()) ++n_wins;
            }
        }
        json summary{{"pairs", per_pair},
                     {"processed", n_done},
                     {"skipped", n_skipped},
                     {"factor", config.sr.factor},
                     {"radius", config.sr.radius},
                     {"epsilon", config.sr.epsilon}};
        if (n_scored > 0) {
            summary["mean_rmse_bilinear"] = sum_rmse_b / static_cast<double>(n_scored);
            summary["mean_rmse_guided"] = sum_rmse_g / static_cast<double>(n_scored);
            summary["guided_win_fraction"] = static_cast<double>(n_wins) / static_cast<double>(n_scored);
        }
        save_json_file(summary, out_dir / "enhance.json");
        std::cout << "enhance: processed " << n_done << " pairs, skipped " << n_skipped << "\n";
        return n_done == 0 ? kExitCompletedWithFailures : kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "enhance: error: " << e.what() << "\n";
        return kExitInputError;
    }
}

// --- evaluate ---

inline int run_evaluate(const fs::path& candidate_dir, const fs::path& truth_dir, const fs::path& out_csv) {
    try {
        std::vector<fs::path> candidates;
        if (!fs::exists(candidate_dir)) throw IoError("no such directory " + candidate_dir.string());
        for (const auto& entry : fs::directory_iterator(candidate_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".pgm")
                candidates.push_back(entry.path());
        std::sort(candidates.begin(), candidates.end());
        if (candidates.empty()) throw InvariantError("evaluate: no candidate maps in " + candidate_dir.string());

        std::ofstream csv(out_csv);
        if (!csv) throw IoError("cannot write " + out_csv.string());
        csv << "file,rmse_c,r2,psnr_db,ssim,gradient_energy_ratio,n_pixels\n";

        bool any_failed = false;
        double sum_rmse = 0.0, sum_r2 = 0.0, sum_ssim = 0.0, sum_ge = 0.0;
        std::size_t n_rows = 0, finite_psnr_rows = 0;
        double sum_psnr = 0.0;
        for (const auto& cand_pgm : candidates) {
            const auto name = cand_pgm.filename().string();
            const auto truth_pgm = truth_dir / name;
            const auto cand_sidecar = fs::path(cand_pgm).replace_extension(".json");
            const auto truth_sidecar = fs::path(truth_pgm).replace_extension(".json");
            try {
                if (!fs::exists(truth_pgm)) throw IoError("missing truth for " + name);
                const auto cand = load_temperature_map(cand_pgm, cand_sidecar);
                const auto truth = load_temperature_map(truth_pgm, truth_sidecar);
                if (cand.map.width != truth.map.width || cand.map.height != truth.map.height)
                    throw InvariantError("dimension mismatch for " + name);

                const double span = truth.range.max_c - truth.range.min_c;
                MetricReport m;
                m.rmse_c = rmse_celsius(cand.map, truth.map);
                std::vector<double> pred, ref;
                std::vector<std::uint8_t> joint(cand.map.valid.size());
                double mse_sum = 0.0;
                for (std::size_t i = 0; i < cand.map.celsius.size(); ++i) {
                    joint[i] = cand.map.valid[i] && truth.map.valid[i];
                    if (!joint[i]) continue;
                    pred.push_back(cand.map.celsius[i]);
                    ref.push_back(truth.map.celsius[i]);
                    const double d = cand.map.celsius[i] - truth.map.celsius[i];
                    mse_sum += d * d;
                }
                m.n_pixels = pred.size();
                m.r2 = r_squared(pred, ref);
                m.psnr_db = psnr_from_mse(mse_sum / static_cast<double>(pred.size()), span);
                m.ssim = ssim(to_gray(cand.map), to_gray(truth.map), span, &joint);
                m.gradient_energy_ratio =
                    gradient_energy(to_gray(cand.map)) / gradient_energy(to_gray(truth.map));

                csv << name << "," << m.rmse_c << "," << m.r2 << ","
                    << (std::isfinite(m.psnr_db) ? std::to_string(m.psnr_db) : "inf") << "," << m.ssim
                    << "," << m.gradient_energy_ratio << "," << m.n_pixels << "\n";
                sum_rmse += m.rmse_c;
                sum_r2 += m.r2;
                sum_ssim += m.ssim;
                sum_ge += m.gradient_energy_ratio;
                if (std::isfinite(m.psnr_db)) {
                    sum_psnr += m.psnr_db;
                    ++finite_psnr_rows;
                }
                ++n_rows;
            } catch (const std::exception& e) {
                std::cerr << "evaluate: " << name << ": " << e.what() << "\n";
                csv << name << ",error,,,,,\n";
                any_failed = true;
            }
        }
        if (n_rows > 0) {
            csv << "MEAN," << sum_rmse / n_rows << "," << sum_r2 / n_rows << ","
                << (finite_psnr_rows ? std::to_string(sum_psnr / finite_psnr_rows) : "inf") << ","
                << sum_ssim / n_rows << "," << sum_ge / n_rows << ",\n";
        }
        return any_failed ? kExitCompletedWithFailures : kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "evaluate: error: " << e.what() << "\n";
        return kExitInputError;
    }
}

} // namespace thermforge
