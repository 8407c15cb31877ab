#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otfs/harness.hpp"

namespace {

// Tolerance the tiny-grid oracle comparison must meet.
constexpr double kOracleTolerance = 1e-10;

otfs::ExperimentConfig load_or_default(const std::string& path) {
    return path.empty() ? otfs::ExperimentConfig{} : otfs::load_config(path);
}

void report_failures(const std::vector<otfs::CellResult>& rows) {
    for (const auto& r : rows) {
        if (r.frames_failed > 0) {
            std::fprintf(stderr, "warning: %s/%s at %g dB: %d of %d frames failed\n",
                         otfs::to_string(r.scheme).c_str(), otfs::to_string(r.mode).c_str(),
                         r.snr_db, r.frames_failed, r.n_frames);
        }
    }
}

int emit(const std::vector<otfs::CellResult>& rows, const otfs::ExperimentConfig& cfg) {
    report_failures(rows);
    if (cfg.output_path == "-") {
        otfs::write_csv(std::cout, rows, cfg);
    } else {
        otfs::write_csv_file(cfg.output_path, rows, cfg);
        std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), cfg.output_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OTFS link-level simulator with Doppler-ambiguity estimation"};
    app.set_version_flag("--version", otfs::version_string());
    app.require_subcommand(1);

    std::string config_path;
    std::vector<double> snr_list;
    std::string scheme;
    std::string mode;
    int frames = 0;
    std::uint64_t seed = 0;
    std::string out;
    int threads = -1;
    bool no_detect = false;

    auto* run = app.add_subcommand("run", "Run one scheme/mode over an SNR list");
    run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    run->add_option("--snr-db", snr_list, "SNR points in dB (comma or space separated)")->delimiter(',');
    run->add_option("--scheme", scheme, "Pilot scheme")->check(CLI::IsMember({"ep-gz", "dsp"}));
    run->add_option("--mode", mode, "Estimation mode")
        ->check(CLI::IsMember({"proposed", "standard", "extended", "perfect-csi"}));
    run->add_option("--frames", frames, "Frames per SNR point")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Base seed");
    run->add_option("--out", out, "Output CSV path, '-' for stdout");
    run->add_option("--threads", threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    run->add_flag("--no-detect", no_detect, "Skip data detection (BER and ESE become nan)");

    std::string sweep_config;
    std::string sweep_out;
    int sweep_threads = -1;
    auto* sweep = app.add_subcommand("sweep", "Run every scheme x mode x PDR x SNR cell of the config");
    sweep->add_option("--config", sweep_config, "JSON config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_out, "Output CSV path, '-' for stdout");
    sweep->add_option("--threads", sweep_threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

    int oracle_draws = 100;
    auto* oracle = app.add_subcommand("oracle-check", "Compare the fast link against the brute-force oracle on an 8 x 4 grid");
    oracle->add_option("--draws", oracle_draws, "Random frame/channel draws")->check(CLI::PositiveNumber);

    std::string ops_config;
    auto* ops = app.add_subcommand("op-count", "Print complex operation counts of the estimators");
    ops->add_option("--config", ops_config, "JSON config file")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = otfs::load_config(config_path);
            if (!snr_list.empty()) cfg.snr_grid_db = snr_list;
            if (!scheme.empty()) cfg.layout.scheme = otfs::parse_pilot_scheme(scheme);
            if (!mode.empty()) cfg.mode = otfs::parse_run_mode(mode);
            if (frames > 0) cfg.n_frames = frames;
            if (run->count("--seed") > 0) cfg.base_seed = seed;
            if (!out.empty()) cfg.output_path = out;
            if (threads >= 0) cfg.threads = threads;
            if (no_detect) cfg.run_detection = false;
            cfg.validate();
            return emit(otfs::run_single(cfg), cfg);
        }
        if (*sweep) {
            auto cfg = otfs::load_config(sweep_config);
            if (!sweep_out.empty()) cfg.output_path = sweep_out;
            if (sweep_threads >= 0) cfg.threads = sweep_threads;
            return emit(otfs::run_sweep_cells(cfg), cfg);
        }
        if (*oracle) {
            const auto r = otfs::run_oracle_check(oracle_draws);
            std::printf("draws: %d\n", r.draws);
            std::printf("time-domain link vs oracle:   %.3e\n", r.max_error_time_domain);
            std::printf("closed-form response vs oracle: %.3e\n", r.max_error_closed_form);
            std::printf("effective matrix vs oracle:   %.3e\n", r.max_error_matrix);
            std::printf("elapsed: %.2f s\n", r.seconds);
            const bool ok = r.worst() < kOracleTolerance;
            std::printf("%s (tolerance %.0e)\n", ok ? "PASS" : "FAIL", kOracleTolerance);
            return ok ? 0 : 1;
        }
        if (*ops) {
            otfs::print_op_count_table(std::cout, load_or_default(ops_config));
            return 0;
        }
    } catch (const otfs::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
