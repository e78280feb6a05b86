// thermforge: calibration, pairing, and RGB-guided enhancement for low-cost
// radiometric thermal cameras.

#include <CLI11.hpp>

#include "thermforge/thermforge.hpp"

namespace tf = thermforge;

int main(int argc, char** argv) {
    CLI::App app{"Thermal camera calibration, alignment, and enhancement toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Root seed for all randomness");
    app.add_option("--threads", threads, "Worker threads for batch commands")->check(CLI::PositiveNumber);

    auto load_cfg = [&]() {
        tf::PipelineConfig cfg = config_path.empty()
                                     ? tf::PipelineConfig{}
                                     : tf::config_from_json(tf::load_json_file(config_path));
        if (app.count("--seed")) cfg.seed = seed;
        cfg.threads = threads;
        return cfg;
    };

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Fit R1 and O against a reference temperature log");
    std::string cal_csv, cal_params, cal_out;
    double cal_tol = 1e-6;
    int cal_max_iter = 2000;
    cal->add_option("log_csv", cal_csv, "CSV with header timestamp,dn,t_ref_c")->required();
    cal->add_option("initial_params", cal_params, "Initial params JSON")->required();
    cal->add_option("out_report", cal_out, "Output calibration report JSON")->required();
    cal->add_option("--tolerance", cal_tol, "Simplex convergence tolerance");
    cal->add_option("--max-iterations", cal_max_iter, "Simplex iteration cap")->check(CLI::PositiveNumber);

    // convert
    auto* conv = app.add_subcommand("convert", "Convert a raw DN frame to an encoded temperature map");
    std::string conv_in, conv_params, conv_out, conv_sidecar;
    conv->add_option("frame_pgm", conv_in, "Input 16-bit PGM of raw digital numbers")->required();
    conv->add_option("params", conv_params, "Params JSON")->required();
    conv->add_option("out_pgm", conv_out, "Output encoded temperature PGM")->required();
    conv->add_option("out_sidecar", conv_sidecar, "Output sidecar JSON")->required();

    // pair
    auto* pair = app.add_subcommand("pair", "Match low-res frames against high-res templates");
    std::string pair_lo, pair_hi, pair_rgb, pair_out;
    pair->add_option("lo_dir", pair_lo, "Directory of timestamp-named low-res PGMs")->required();
    pair->add_option("hi_dir", pair_hi, "Directory of timestamp-named high-res PGMs")->required();
    pair->add_option("rgb_dir", pair_rgb, "Directory of timestamp-named RGB PPMs (may be empty)")->required();
    pair->add_option("out_dir", pair_out, "Output directory for crops and match reports")->required();
    double pair_threshold = -1.0;
    pair->add_option("--threshold", pair_threshold, "NCC acceptance threshold (default 0.75)");

    // enhance
    auto* enh = app.add_subcommand("enhance", "Guided upsampling of paired frames");
    std::string enh_in, enh_out;
    enh->add_option("pair_dir", enh_in, "Output of pair or synth")->required();
    enh->add_option("out_dir", enh_out, "Output directory")->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Metric comparison of candidate maps against truth");
    std::string eval_cand, eval_truth, eval_csv;
    eval->add_option("candidate_dir", eval_cand, "Encoded temperature maps to score")->required();
    eval->add_option("truth_dir", eval_truth, "Matching ground-truth maps")->required();
    eval->add_option("out_csv", eval_csv, "Output CSV")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic test corpus");
    std::string synth_out;
    int synth_count = 20, synth_decoys = 0;
    synth->add_option("out_dir", synth_out, "Output directory")->required();
    synth->add_option("--count", synth_count, "Number of scenes")->check(CLI::NonNegativeNumber);
    synth->add_option("--decoys", synth_decoys, "Number of unrelated decoy pairs")
        ->check(CLI::NonNegativeNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cal) return tf::run_calibrate(cal_csv, cal_params, cal_out, cal_tol, cal_max_iter);
        if (*conv) return tf::run_convert(conv_in, conv_params, conv_out, conv_sidecar, load_cfg().range);
        if (*pair) {
            auto cfg = load_cfg();
            if (pair_threshold > 0.0) cfg.ncc_threshold = pair_threshold;
            return tf::run_pair(pair_lo, pair_hi, pair_rgb, cfg, pair_out);
        }
        if (*enh) return tf::run_enhance(enh_in, load_cfg(), enh_out);
        if (*eval) return tf::run_evaluate(eval_cand, eval_truth, eval_csv);
        if (*synth) return tf::run_synth(load_cfg(), synth_out, synth_count, synth_decoys);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tf::kExitInputError;
    }
    return tf::kExitInputError;
}
