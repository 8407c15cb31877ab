#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/detector.hpp"
#include "otfs/estimator.hpp"
#include "otfs/grid.hpp"
#include "otfs/modem.hpp"

namespace otfs {

enum class RunMode { Proposed, StandardMle, ExtendedMle, PerfectCsi };

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);

struct LayoutParams {
    PilotScheme scheme = PilotScheme::EpGz;
    int n_pilots_ep_gz = 2;
    int n_pilots_dsp = 5;
    double pdr_db = 25.0;

    int n_pilots() const { return scheme == PilotScheme::EpGz ? n_pilots_ep_gz : n_pilots_dsp; }
};

/// Defaults reproduce the reference simulation parameters (64 x 32 grid, 2 GHz, 15 kHz, ...).
struct ExperimentConfig {
    GridConfig grid;
    ChannelSpec channel;
    LayoutParams layout;
    EstimatorConfig estimator;
    DetectorConfig detector;
    RunMode mode = RunMode::Proposed;
    std::vector<double> snr_grid_db{0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
    int n_frames = 200;
    std::uint64_t base_seed = 1;
    std::string output_path = "results.csv";
    int threads = 1;
    bool run_detection = true;

    // Sweep axes; run_sweep iterates scheme x mode x pdr x snr.
    std::vector<PilotScheme> sweep_schemes{PilotScheme::EpGz, PilotScheme::Dsp};
    std::vector<RunMode> sweep_modes{RunMode::PerfectCsi, RunMode::Proposed, RunMode::StandardMle,
                                     RunMode::ExtendedMle};
    std::vector<double> sweep_pdr_db{25.0};

    void validate() const;
    PilotLayout make_layout() const;
    EstimatorConfig estimator_for_run() const;  // estimator config with mode taken from `mode`
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);

struct TrialRecord {
    std::uint64_t trial_index = 0;
    std::uint64_t seed = 0;
    double snr_db = 0.0;
    double pdr_db = 0.0;
    PilotScheme scheme = PilotScheme::EpGz;
    RunMode mode = RunMode::Proposed;
    std::vector<std::uint8_t> ambiguity_correct;  // one flag per matched true path
    std::uint64_t bit_errors = 0;
    std::uint64_t bits_total = 0;
    double nmse = 0.0;
    bool failed = false;
    std::string error;
    int ambiguity_defaulted = 0;
    int mpa_iterations = 0;
    bool mpa_converged = true;

    bool operator==(const TrialRecord&) const = default;
};

/// Per-trial seed: a 64-bit mix of base_seed + trial_index.
std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index);

/// AWGN variance for unit-energy data at the given SNR.
double noise_variance_for_snr(double snr_db);

/// One frame end to end. Deterministic in (cfg, snr_db, trial_index); errors are recorded, not thrown.
TrialRecord run_trial(const ExperimentConfig& cfg, double snr_db, std::uint64_t trial_index);

/**
 * Greedy truth matching: each estimate, in extraction order, takes the
 * unmatched true path minimizing |delay error|, then the circular error of
 * the base Doppler. A match counts as resolved when the estimated full
 * Doppler lies in the same N-period as the true one.
 */
std::vector<std::uint8_t> ambiguity_flags(std::span<const PathParams> truth,
                                          std::span<const PathEstimate> estimates, int N);

double compute_dadp(std::span<const TrialRecord> records);
double compute_nmse(std::span<const PathParams> truth, std::span<const PathParams> estimates,
                    const GridConfig& cfg);
double compute_ese(double ber, const PilotLayout& layout, const GridConfig& cfg);
double compute_ese(std::span<const TrialRecord> records, const PilotLayout& layout,
                   const GridConfig& cfg);

struct CellResult {
    PilotScheme scheme = PilotScheme::EpGz;
    RunMode mode = RunMode::Proposed;
    double snr_db = 0.0;
    double pdr_db = 0.0;
    int n_frames = 0;
    int frames_failed = 0;
    double ber = 0.0;
    double nmse = 0.0;  // linear, mean over successful frames in trial order
    double dadp = 0.0;
    double ese = 0.0;
    std::uint64_t seed_base = 0;

    double nmse_db() const;
};

CellResult aggregate(std::span<const TrialRecord> records, const ExperimentConfig& cfg,
                     double snr_db);

/// Runs n_frames trials for one configuration on `threads` workers (0 = hardware concurrency).
std::vector<TrialRecord> run_cell(const ExperimentConfig& cfg, double snr_db, int threads);

/// Every (scheme, mode, pdr, snr) cell of the configured sweep.
std::vector<CellResult> run_sweep_cells(const ExperimentConfig& cfg);

/// Only the `mode`/`layout.scheme`/`layout.pdr_db` row set over snr_grid_db.
std::vector<CellResult> run_single(const ExperimentConfig& cfg);

inline constexpr const char* kCsvHeader =
    "scheme,mode,snr_db,pdr_db,n_frames,ber,nmse_db,dadp,ese,frames_failed,seed_base";

std::string format_csv_row(const CellResult& r);
void write_csv(std::ostream& os, const std::vector<CellResult>& rows, const ExperimentConfig& cfg);
void write_csv_file(const std::string& path, const std::vector<CellResult>& rows,
                    const ExperimentConfig& cfg);

/// Lines of a CSV document that are not `#` metadata.
std::string csv_body(const std::string& csv_text);

std::string version_string();

struct OracleReport {
    int draws = 0;
    double max_error_time_domain = 0.0;  // modulate -> apply_channel -> demodulate vs oracle
    double max_error_closed_form = 0.0;  // dd_channel_response vs oracle
    double max_error_matrix = 0.0;       // dense effective matrix vs oracle
    double seconds = 0.0;

    double worst() const;
};

/**
 * Random Gaussian frames through random channels with ambiguous Dopplers on
 * a small grid, each compared against oracle_dd_response.
 */
OracleReport run_oracle_check(int draws = 100, std::uint64_t seed = 2024, int M = 8, int N = 4);

struct OpCountRow {
    EstimatorMode mode;
    OpCount ops;
};

std::vector<OpCountRow> op_count_table(const ExperimentConfig& cfg);
void print_op_count_table(std::ostream& os, const ExperimentConfig& cfg);

}  // namespace otfs
