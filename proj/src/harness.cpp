#include "otfs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <random>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "otfs/rng.hpp"

#ifndef OTFS_VERSION
#define OTFS_VERSION "0.1.0-unknown"
#endif

namespace otfs {

using nlohmann::json;

namespace {

constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kBitStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

double circular_distance(double a, double b, int N) {
    double d = std::fmod(a - b, static_cast<double>(N));
    if (d < -0.5 * N) d += N;
    if (d >= 0.5 * N) d -= N;
    return std::abs(d);
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Proposed: return "proposed";
        case RunMode::StandardMle: return "standard";
        case RunMode::ExtendedMle: return "extended";
        case RunMode::PerfectCsi: return "perfect-csi";
    }
    return "unknown";
}

RunMode parse_run_mode(const std::string& text) {
    if (text == "proposed") return RunMode::Proposed;
    if (text == "standard") return RunMode::StandardMle;
    if (text == "extended") return RunMode::ExtendedMle;
    if (text == "perfect-csi") return RunMode::PerfectCsi;
    throw ConfigError("unknown mode: " + text + " (expected proposed|standard|extended|perfect-csi)");
}

void ExperimentConfig::validate() const {
    grid.validate();
    channel.validate(grid);
    estimator.validate();
    detector.validate(grid);
    if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
    if (snr_grid_db.empty()) throw ConfigError("snr grid must not be empty");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (sweep_schemes.empty() || sweep_modes.empty() || sweep_pdr_db.empty()) {
        throw ConfigError("sweep axes must not be empty");
    }
    (void)make_layout();
}

PilotLayout ExperimentConfig::make_layout() const {
    return build_layout(layout.scheme, grid, channel, layout.n_pilots(), layout.pdr_db);
}

EstimatorConfig ExperimentConfig::estimator_for_run() const {
    EstimatorConfig e = estimator;
    switch (mode) {
        case RunMode::Proposed: e.mode = EstimatorMode::Proposed; break;
        case RunMode::StandardMle: e.mode = EstimatorMode::StandardMle; break;
        case RunMode::ExtendedMle: e.mode = EstimatorMode::ExtendedMle; break;
        case RunMode::PerfectCsi: break;
    }
    return e;
}

ExperimentConfig parse_config(const std::string& json_text) {
    ExperimentConfig cfg;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        bool n_paths_set = false;
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            read_if(g, "M", cfg.grid.M);
            read_if(g, "N", cfg.grid.N);
            read_if(g, "delta_f", cfg.grid.delta_f);
            read_if(g, "f_c", cfg.grid.f_c);
            read_if(g, "mod_order", cfg.grid.mod_order);
        }
        if (j.contains("channel")) {
            const auto& c = j.at("channel");
            read_if(c, "n_paths", cfg.channel.n_paths);
            read_if(c, "l_max", cfg.channel.l_max);
            read_if(c, "k_max", cfg.channel.k_max);
            if (c.contains("gain_profile")) {
                cfg.channel.gain_profile = parse_gain_profile(c.at("gain_profile").get<std::string>());
            }
        }
        if (j.contains("layout")) {
            const auto& l = j.at("layout");
            if (l.contains("scheme")) cfg.layout.scheme = parse_pilot_scheme(l.at("scheme").get<std::string>());
            read_if(l, "n_pilots_ep_gz", cfg.layout.n_pilots_ep_gz);
            read_if(l, "n_pilots_dsp", cfg.layout.n_pilots_dsp);
            read_if(l, "pdr_db", cfg.layout.pdr_db);
        }
        if (j.contains("estimator")) {
            const auto& e = j.at("estimator");
            read_if(e, "epsilon", cfg.estimator.epsilon);
            if (e.contains("n_paths")) {
                cfg.estimator.n_paths = e.at("n_paths").get<int>();
                n_paths_set = true;
            }
            read_if(e, "n_amb_max", cfg.estimator.n_amb_max);
            if (e.contains("mode")) cfg.estimator.mode = parse_estimator_mode(e.at("mode").get<std::string>());
            read_if(e, "residual_stop", cfg.estimator.residual_stop);
            read_if(e, "residual_stop_fraction", cfg.estimator.residual_stop_fraction);
        }
        if (!n_paths_set) cfg.estimator.n_paths = cfg.channel.n_paths;
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            if (d.contains("algorithm")) {
                cfg.detector.algorithm = parse_detector_algorithm(d.at("algorithm").get<std::string>());
            }
            read_if(d, "mpa_max_iters", cfg.detector.mpa_max_iters);
            read_if(d, "mpa_damping", cfg.detector.mpa_damping);
            read_if(d, "mpa_conv_tol", cfg.detector.mpa_conv_tol);
            read_if(d, "doppler_trunc", cfg.detector.doppler_trunc);
        }
        if (j.contains("run")) {
            const auto& r = j.at("run");
            if (r.contains("mode")) cfg.mode = parse_run_mode(r.at("mode").get<std::string>());
            read_if(r, "snr_db", cfg.snr_grid_db);
            read_if(r, "frames", cfg.n_frames);
            read_if(r, "seed", cfg.base_seed);
            read_if(r, "output", cfg.output_path);
            read_if(r, "threads", cfg.threads);
            read_if(r, "detect", cfg.run_detection);
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.contains("schemes")) {
                cfg.sweep_schemes.clear();
                for (const auto& v : s.at("schemes")) cfg.sweep_schemes.push_back(parse_pilot_scheme(v.get<std::string>()));
            }
            if (s.contains("modes")) {
                cfg.sweep_modes.clear();
                for (const auto& v : s.at("modes")) cfg.sweep_modes.push_back(parse_run_mode(v.get<std::string>()));
            }
            read_if(s, "pdr_db", cfg.sweep_pdr_db);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["grid"] = {{"M", cfg.grid.M}, {"N", cfg.grid.N}, {"delta_f", cfg.grid.delta_f},
                 {"f_c", cfg.grid.f_c}, {"mod_order", cfg.grid.mod_order}};
    j["channel"] = {{"n_paths", cfg.channel.n_paths}, {"l_max", cfg.channel.l_max},
                    {"k_max", cfg.channel.k_max},
                    {"gain_profile", to_string(cfg.channel.gain_profile)}};
    j["layout"] = {{"scheme", to_string(cfg.layout.scheme)},
                   {"n_pilots_ep_gz", cfg.layout.n_pilots_ep_gz},
                   {"n_pilots_dsp", cfg.layout.n_pilots_dsp}, {"pdr_db", cfg.layout.pdr_db}};
    j["estimator"] = {{"epsilon", cfg.estimator.epsilon}, {"n_paths", cfg.estimator.n_paths},
                      {"n_amb_max", cfg.estimator.n_amb_max},
                      {"mode", to_string(cfg.estimator.mode)},
                      {"residual_stop", cfg.estimator.residual_stop},
                      {"residual_stop_fraction", cfg.estimator.residual_stop_fraction}};
    j["detector"] = {{"algorithm", to_string(cfg.detector.algorithm)},
                     {"mpa_max_iters", cfg.detector.mpa_max_iters},
                     {"mpa_damping", cfg.detector.mpa_damping},
                     {"mpa_conv_tol", cfg.detector.mpa_conv_tol},
                     {"doppler_trunc", cfg.detector.doppler_trunc}};
    j["run"] = {{"mode", to_string(cfg.mode)}, {"snr_db", cfg.snr_grid_db},
                {"frames", cfg.n_frames}, {"seed", cfg.base_seed},
                {"output", cfg.output_path}, {"threads", cfg.threads},
                {"detect", cfg.run_detection}};
    std::vector<std::string> schemes, modes;
    for (auto s : cfg.sweep_schemes) schemes.push_back(to_string(s));
    for (auto m : cfg.sweep_modes) modes.push_back(to_string(m));
    j["sweep"] = {{"schemes", schemes}, {"modes", modes}, {"pdr_db", cfg.sweep_pdr_db}};
    return j.dump();
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index) {
    return mix_seed(base_seed + trial_index);
}

double noise_variance_for_snr(double snr_db) {
    return 1.0 / std::pow(10.0, snr_db / 10.0);
}

std::vector<std::uint8_t> ambiguity_flags(std::span<const PathParams> truth,
                                          std::span<const PathEstimate> estimates, int N) {
    std::vector<std::uint8_t> flags;
    std::vector<bool> used(truth.size(), false);
    for (const auto& est : estimates) {
        int best = -1;
        int best_dl = 0;
        double best_dk = 0.0;
        const double est_base = est.k_base_int_hat + est.kappa_hat;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (used[t]) continue;
            const int dl = std::abs(est.delay_hat - truth[t].delay);
            const double dk = circular_distance(est_base, truth[t].doppler, N);
            if (best < 0 || dl < best_dl || (dl == best_dl && dk < best_dk)) {
                best = static_cast<int>(t);
                best_dl = dl;
                best_dk = dk;
            }
        }
        if (best < 0) break;
        used[best] = true;
        const double periods = (est.k_full_hat - truth[best].doppler) / static_cast<double>(N);
        flags.push_back(std::lround(periods) == 0 ? 1 : 0);
    }
    // Paths the estimator never reached count as unresolved.
    while (flags.size() < truth.size()) flags.push_back(0);
    return flags;
}

TrialRecord run_trial(const ExperimentConfig& cfg, double snr_db, std::uint64_t trial_index) {
    TrialRecord rec;
    rec.trial_index = trial_index;
    rec.seed = trial_seed(cfg.base_seed, trial_index);
    rec.snr_db = snr_db;
    rec.pdr_db = cfg.layout.pdr_db;
    rec.scheme = cfg.layout.scheme;
    rec.mode = cfg.mode;
    try {
        const auto& grid = cfg.grid;
        const auto layout = cfg.make_layout();

        Rng channel_rng = make_stream(rec.seed, kChannelStream);
        Rng bit_rng = make_stream(rec.seed, kBitStream);
        Rng noise_rng = make_stream(rec.seed, kNoiseStream);

        const auto channel = sample_channel(cfg.channel, channel_rng);
        Bits bits(static_cast<std::size_t>(layout.data_cell_count()) * grid.bits_per_symbol());
        for (auto& b : bits) b = static_cast<std::uint8_t>(bit_rng() >> 63);

        const auto frame = assemble_frame(layout, bits, grid);
        const double noise_var = noise_variance_for_snr(snr_db);
        const auto rx = add_awgn(apply_channel(modulate(frame.dd, grid), channel, grid),
                                 noise_var, noise_rng);
        const DDFrame y = demodulate(rx, grid);

        std::vector<PathEstimate> estimates;
        if (cfg.mode == RunMode::PerfectCsi) {
            for (const auto& p : channel.paths) {
                const auto d = decompose_doppler(p.doppler, grid.N);
                PathEstimate e;
                e.gain_hat = p.gain;
                e.delay_hat = p.delay;
                e.k_base_int_hat = d.k_base_int;
                e.kappa_hat = d.kappa;
                e.n_amb_hat = d.n_amb;
                e.k_full_hat = p.doppler;
                estimates.push_back(e);
            }
        } else {
            ChannelEstimator estimator(grid, layout, cfg.estimator_for_run(), cfg.channel.k_max);
            estimates = estimator.estimate_all_paths(y);
            rec.ambiguity_defaulted = estimator.diagnostics().ambiguity_defaulted;
        }

        rec.ambiguity_correct = ambiguity_flags(channel.paths, estimates, grid.N);
        const auto est_paths = to_paths(estimates);
        rec.nmse = compute_nmse(channel.paths, est_paths, grid);

        if (cfg.run_detection) {
            const auto det = detect(y, est_paths, layout, cfg.detector, noise_var, grid);
            rec.bits_total = bits.size();
            for (std::size_t i = 0; i < bits.size(); ++i) rec.bit_errors += det.bits[i] != bits[i];
            rec.mpa_iterations = det.iterations;
            rec.mpa_converged = det.converged;
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    return rec;
}

double compute_dadp(std::span<const TrialRecord> records) {
    std::uint64_t correct = 0;
    std::uint64_t total = 0;
    for (const auto& r : records) {
        for (auto f : r.ambiguity_correct) {
            correct += f;
            ++total;
        }
    }
    return total == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : static_cast<double>(correct) / static_cast<double>(total);
}

double compute_nmse(std::span<const PathParams> truth, std::span<const PathParams> estimates,
                    const GridConfig& cfg) {
    const double reference = effective_channel_distance_sq(truth, {}, cfg);
    if (!(reference > 0.0)) throw ConfigError("true channel has zero energy");
    return effective_channel_distance_sq(truth, estimates, cfg) / reference;
}

double compute_ese(double ber, const PilotLayout& layout, const GridConfig& cfg) {
    return static_cast<double>(layout.data_cell_count()) / static_cast<double>(cfg.frame_size()) * cfg.bits_per_symbol() *
           (1.0 - ber);
}

double compute_ese(std::span<const TrialRecord> records, const PilotLayout& layout,
                   const GridConfig& cfg) {
    std::uint64_t errors = 0;
    std::uint64_t total = 0;
    for (const auto& r : records) {
        errors += r.bit_errors;
        total += r.bits_total;
    }
    const double ber = total == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : static_cast<double>(errors) / static_cast<double>(total);
    return compute_ese(ber, layout, cfg);
}

double CellResult::nmse_db() const { return 10.0 * std::log10(nmse); }

CellResult aggregate(std::span<const TrialRecord> records, const ExperimentConfig& cfg,
                     double snr_db) {
    CellResult c;
    c.scheme = cfg.layout.scheme;
    c.mode = cfg.mode;
    c.snr_db = snr_db;
    c.pdr_db = cfg.layout.pdr_db;
    c.seed_base = cfg.base_seed;
    c.n_frames = static_cast<int>(records.size());

    std::vector<TrialRecord> ok;
    double nmse_sum = 0.0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    for (const auto& r : records) {
        if (r.failed) {
            ++c.frames_failed;
            continue;
        }
        nmse_sum += r.nmse;
        errors += r.bit_errors;
        bits += r.bits_total;
        ok.push_back(r);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    c.nmse = ok.empty() ? nan : nmse_sum / static_cast<double>(ok.size());
    c.dadp = ok.empty() ? nan : compute_dadp(ok);
    c.ber = bits == 0 ? nan : static_cast<double>(errors) / static_cast<double>(bits);
    c.ese = compute_ese(c.ber, cfg.make_layout(), cfg.grid);
    return c;
}

std::vector<TrialRecord> run_cell(const ExperimentConfig& cfg, double snr_db, int threads) {
    const int n = cfg.n_frames;
    std::vector<TrialRecord> records(n);
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) records[i] = run_trial(cfg, snr_db, static_cast<std::uint64_t>(i));
        return records;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                records[i] = run_trial(cfg, snr_db, static_cast<std::uint64_t>(i));
            }
        });
    }
    pool.clear();  // joins
    return records;
}

std::vector<CellResult> run_sweep_cells(const ExperimentConfig& cfg) {
    std::vector<CellResult> rows;
    for (auto scheme : cfg.sweep_schemes) {
        for (auto mode : cfg.sweep_modes) {
            for (double pdr : cfg.sweep_pdr_db) {
                ExperimentConfig cell = cfg;
                cell.layout.scheme = scheme;
                cell.layout.pdr_db = pdr;
                cell.mode = mode;
                for (double snr : cfg.snr_grid_db) {
                    const auto records = run_cell(cell, snr, cfg.threads);
                    rows.push_back(aggregate(records, cell, snr));
                }
            }
        }
    }
    return rows;
}

std::vector<CellResult> run_single(const ExperimentConfig& cfg) {
    ExperimentConfig one = cfg;
    one.sweep_schemes = {cfg.layout.scheme};
    one.sweep_modes = {cfg.mode};
    one.sweep_pdr_db = {cfg.layout.pdr_db};
    return run_sweep_cells(one);
}

std::string format_csv_row(const CellResult& r) {
    std::ostringstream os;
    os << to_string(r.scheme) << ',' << to_string(r.mode) << ',' << format_number(r.snr_db) << ','
       << format_number(r.pdr_db) << ',' << r.n_frames << ',' << format_number(r.ber) << ','
       << format_number(r.nmse_db()) << ',' << format_number(r.dadp) << ','
       << format_number(r.ese) << ',' << r.frames_failed << ',' << r.seed_base;
    return os.str();
}

void write_csv(std::ostream& os, const std::vector<CellResult>& rows, const ExperimentConfig& cfg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);

    os << "# version: " << version_string() << '\n';
    os << "# timestamp: " << stamp << '\n';
    os << "# gain_profile: " << to_string(cfg.channel.gain_profile) << " (per-path variance 1/P)\n";
    os << "# doppler_trunc: " << cfg.detector.doppler_trunc << '\n';
    os << "# config: " << config_to_json(cfg) << '\n';
    os << kCsvHeader << '\n';
    for (const auto& r : rows) os << format_csv_row(r) << '\n';
}

void write_csv_file(const std::string& path, const std::vector<CellResult>& rows,
                    const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file for writing: " + path);
    write_csv(out, rows, cfg);
    out.flush();
    if (!out) throw std::runtime_error("failed writing output file: " + path);
}

std::string csv_body(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::string body;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') continue;
        body += line;
        body += '\n';
    }
    return body;
}

std::string version_string() { return OTFS_VERSION; }

double OracleReport::worst() const {
    return std::max({max_error_time_domain, max_error_closed_form, max_error_matrix});
}

OracleReport run_oracle_check(int draws, std::uint64_t seed, int M, int N) {
    GridConfig grid;
    grid.M = M;
    grid.N = N;
    grid.validate();
    ChannelSpec spec;
    spec.n_paths = 4;
    spec.l_max = M - 1;
    spec.k_max = 2.5 * N;  // reaches two Doppler periods out

    const auto start = std::chrono::steady_clock::now();
    OracleReport report;
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    for (int d = 0; d < draws; ++d) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(d));
        DDFrame x(M, N);
        for (auto& c : x.cells()) c = {gauss(rng), gauss(rng)};
        const auto ch = sample_channel(spec, rng);

        const DDFrame oracle = oracle_dd_response(x, ch, grid);
        const DDFrame fast = demodulate(apply_channel(modulate(x, grid), ch, grid), grid);
        const DDFrame closed = dd_channel_response(x, ch.paths, grid);

        const Eigen::MatrixXcd h = effective_channel_matrix(ch.paths, grid);
        const Eigen::Map<const Eigen::VectorXcd> xv(x.cells().data(), M * N);
        const Eigen::VectorXcd yv = h * xv;
        DDFrame via_matrix(M, N);
        std::copy(yv.data(), yv.data() + yv.size(), via_matrix.cells().begin());

        report.max_error_time_domain = std::max(report.max_error_time_domain, max_abs_difference(fast, oracle));
        report.max_error_closed_form = std::max(report.max_error_closed_form, max_abs_difference(closed, oracle));
        report.max_error_matrix = std::max(report.max_error_matrix, max_abs_difference(via_matrix, oracle));
        ++report.draws;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<OpCountRow> op_count_table(const ExperimentConfig& cfg) {
    const auto layout = cfg.make_layout();
    std::vector<OpCountRow> rows;
    for (auto mode : {EstimatorMode::Proposed, EstimatorMode::StandardMle, EstimatorMode::ExtendedMle}) {
        EstimatorConfig e = cfg.estimator;
        e.mode = mode;
        rows.push_back({mode, op_count(e, cfg.grid, layout)});
    }
    return rows;
}

void print_op_count_table(std::ostream& os, const ExperimentConfig& cfg) {
    const auto rows = op_count_table(cfg);
    char line[256];
    std::snprintf(line, sizeof(line), "# M=%d N=%d P=%d l_max=%d N_p=%d eps=%g n_amb_max=%d scheme=%s\n",
                  cfg.grid.M, cfg.grid.N, cfg.estimator.n_paths, cfg.channel.l_max,
                  cfg.layout.n_pilots(), cfg.estimator.epsilon, cfg.estimator.n_amb_max,
                  to_string(cfg.layout.scheme).c_str());
    os << line;
    os << "mode,coarse_add,pairwise_mul,fine_add,fine_mul,total_add,total_mul\n";
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%.0f,%.0f,%.0f,%.0f,%.0f,%.0f\n",
                      to_string(r.mode).c_str(), r.ops.coarse_additions,
                      r.ops.pairwise_multiplications, r.ops.fine_additions,
                      r.ops.fine_multiplications, r.ops.total_additions(),
                      r.ops.total_multiplications());
        os << line;
    }
    const auto& prop = rows[0].ops;
    const auto& ext = rows[2].ops;
    std::snprintf(line, sizeof(line), "# extended/proposed fine-stage ratio: add %.6g, mul %.6g\n",
                  ext.fine_additions / prop.fine_additions,
                  ext.fine_multiplications / prop.fine_multiplications);
    os << line;
}

}  // namespace otfs
