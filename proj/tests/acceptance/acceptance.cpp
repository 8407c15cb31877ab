// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "otfs/harness.hpp"
#include "otfs/rng.hpp"

using namespace otfs;

namespace {

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int worker_count() {
    return std::max(1u, std::thread::hardware_concurrency());
}

CellResult cell(ExperimentConfig cfg, PilotScheme scheme, RunMode mode, double snr, int frames,
                bool detection) {
    cfg.layout.scheme = scheme;
    cfg.mode = mode;
    cfg.n_frames = frames;
    cfg.run_detection = detection;
    const auto records = run_cell(cfg, snr, worker_count());
    return aggregate(records, cfg, snr);
}

double wrap_phase(double x) {
    return std::remainder(x, kTwoPi);
}

void oracle_equivalence() {
    const auto r = run_oracle_check(100, 2024, 8, 4);
    report(r.worst() < 1e-10 && r.seconds < 10.0, "oracle-equivalence",
           fmt("100 draws on 8x4, max error %.2e (limit 1e-10), %.2f s (limit 10 s)", r.worst(), r.seconds));
}

void pilot_phase_law() {
    const GridConfig g;
    const int M = g.M, N = g.N;
    Rng rng = make_stream(501, 0);
    std::uniform_real_distribution<double> kd(-79.0, 79.0);
    std::uniform_int_distribution<int> ld(0, 4);
    std::uniform_int_distribution<int> pd(0, M - 4 - 2);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double k = kd(rng);
        const int l = ld(rng);
        const int lp = pd(rng);
        DDFrame x(M, N);
        x(lp, 0) = 1.0;
        const auto y = demodulate(apply_channel(modulate(x, g), {{{{1.0, 0.0}, l, k}}}, g), g);
        const auto d = decompose_doppler(k, N);
        const double measured = std::arg(y((lp + l) % M, (d.k_base_int + N) % N)) - std::arg(spreading_factor(d.kappa, N));
        worst = std::max(worst, std::abs(wrap_phase(measured - kTwoPi * lp * k / (M * N))));
    }
    report(worst < 1e-6, "pilot-phase-law", fmt("50 single-path cases, max phase error %.2e rad (limit 1e-6)", worst));
}

void decomposition_round_trip() {
    Rng rng = make_stream(502, 0);
    const int N = 32;
    std::uniform_real_distribution<double> kd(-10.0 * N, 10.0 * N);
    int exact = 0, member = 0;
    for (int i = 0; i < 10000; ++i) {
        const double k = kd(rng);
        const auto d = decompose_doppler(k, N);
        exact += std::abs(d.recompose(N) - k) <= 1e-12 * std::max(1.0, std::abs(k));
        member += d.k_base >= -0.5 * N && d.k_base < 0.5 * N;
    }
    report(exact == 10000 && member == 10000, "decomposition-round-trip",
           fmt("recomposed %d/10000, base interval %d/10000", exact, member));
}

void noiseless_ambiguity_recovery() {
    ExperimentConfig cfg;
    const auto lay = cfg.make_layout();
    EstimatorConfig est = cfg.estimator;
    est.n_paths = 1;
    est.mode = EstimatorMode::Proposed;
    ChannelEstimator estimator(cfg.grid, lay, est, cfg.channel.k_max);
    Rng rng = make_stream(503, 0);
    std::uniform_real_distribution<double> kd(-79.0, 79.0);
    std::uniform_int_distribution<int> ld(0, cfg.channel.l_max);
    std::uniform_real_distribution<double> ph(0.0, kTwoPi);
    int correct = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const PathParams p{std::polar(1.0, ph(rng)), ld(rng), kd(rng)};
        const auto y = demodulate(apply_channel(modulate(lay.pilot_frame(), cfg.grid), {{p}}, cfg.grid), cfg.grid);
        const auto e = estimator.estimate_all_paths(y).at(0);
        // bins +N/2 and -N/2 coincide, so the integer is judged relative to the estimated base bin
        const long long implied = std::llround((std::round(p.doppler) - e.k_base_int_hat) / cfg.grid.N);
        correct += e.n_amb_hat == implied && std::llround((e.k_full_hat - p.doppler) / cfg.grid.N) == 0;
        worst = std::max(worst, std::abs(e.k_full_hat - p.doppler));
    }
    const double limit = cfg.estimator.epsilon / 2 + 1e-6;
    report(correct == 200 && worst <= limit, "noiseless-ambiguity-recovery",
           fmt("ambiguity correct %d/200, max |k_hat - k| %.4f (limit %.6f)", correct, worst, limit));
}

void velocity_bounds() {
    GridConfig g;
    const double expect[3] = {4050.0, 8100.0, 16200.0};
    const double spacing[3] = {15e3, 30e3, 60e3};
    double worst = 0.0;
    std::string detail;
    for (int i = 0; i < 3; ++i) {
        g.delta_f = spacing[i];
        const double kmh = max_unambiguous_velocity(g) * 3.6;
        worst = std::max(worst, std::abs(kmh - expect[i]) / expect[i]);
        detail += fmt("%.0f kHz -> %.1f km/h; ", spacing[i] / 1e3, kmh);
    }
    report(worst <= 0.01, "velocity-bounds", detail + fmt("max relative error %.4f (limit 0.01)", worst));
}

void dadp_convergence() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg;
    const int frames = 200;
    double worst_epgz = 1.0;
    std::string detail = "EP-GZ";
    for (double snr : {10.0, 15.0, 20.0, 25.0}) {
        const auto c = cell(cfg, PilotScheme::EpGz, RunMode::Proposed, snr, frames, false);
        worst_epgz = std::min(worst_epgz, c.dadp);
        detail += fmt(" %g dB %.4f;", snr, c.dadp);
    }
    const auto dsp = cell(cfg, PilotScheme::Dsp, RunMode::Proposed, 15.0, frames, false);
    const double elapsed = seconds_since(t0);
    detail += fmt(" DSP 15 dB %.4f; %d frames per point, %.1f s", dsp.dadp, frames, elapsed);
    report(worst_epgz >= 0.99 && dsp.dadp >= 0.90 && elapsed < 1200.0, "dadp-convergence",
           detail + " (limits: EP-GZ >= 0.99, DSP >= 0.90, < 20 min)");
}

void standard_mle_failure() {
    const ExperimentConfig cfg;
    const auto c = cell(cfg, PilotScheme::EpGz, RunMode::StandardMle, 15.0, 500, true);
    report(c.ber >= 0.45 && c.ber <= 0.55 && c.frames_failed == 0, "standard-mle-failure",
           fmt("BER %.4f over 500 frames at 15 dB (band [0.45, 0.55])", c.ber));
}

void proposed_matches_extended() {
    const ExperimentConfig cfg;
    bool ok = true;
    std::string detail;
    for (double snr : {10.0, 15.0, 20.0}) {
        const auto p = cell(cfg, PilotScheme::EpGz, RunMode::Proposed, snr, 500, true);
        const auto e = cell(cfg, PilotScheme::EpGz, RunMode::ExtendedMle, snr, 500, true);
        const double dnmse = std::abs(p.nmse_db() - e.nmse_db());
        const double ratio = p.ber / e.ber;
        ok = ok && dnmse <= 1.0 && ratio >= 0.5 && ratio <= 2.0;
        detail += fmt("%g dB: NMSE %.2f vs %.2f dB, BER %.3e vs %.3e (ratio %.2f); ", snr, p.nmse_db(),
                      e.nmse_db(), p.ber, e.ber, ratio);
    }
    report(ok, "proposed-matches-extended", detail + "limits |dNMSE| <= 1 dB, ratio in [0.5, 2]");
}

void ep_gz_vs_dsp_floor() {
    const ExperimentConfig cfg;
    const int frames = 500;
    auto nmse = [&](PilotScheme s, double snr) {
        return cell(cfg, s, RunMode::Proposed, snr, frames, false).nmse_db();
    };
    const double ep5 = nmse(PilotScheme::EpGz, 5.0);
    const double ep15 = nmse(PilotScheme::EpGz, 15.0);
    const double ep20 = nmse(PilotScheme::EpGz, 20.0);
    const double dsp15 = nmse(PilotScheme::Dsp, 15.0);
    const double dsp20 = nmse(PilotScheme::Dsp, 20.0);
    const bool lower = ep20 < dsp20;
    const bool decays = ep5 - ep20 >= 5.0;
    const bool flatter = (dsp15 - dsp20) < (ep15 - ep20);
    report(lower && decays && flatter, "ep-gz-vs-dsp-floor",
           fmt("NMSE dB EP-GZ 5/15/20: %.2f/%.2f/%.2f, DSP 15/20: %.2f/%.2f; "
               "EP-GZ < DSP at 20 dB: %s, EP-GZ decay 5->20 %.2f dB (>= 5): %s, "
               "DSP decay 15->20 %.2f < EP-GZ %.2f: %s",
               ep5, ep15, ep20, dsp15, dsp20, lower ? "yes" : "no", ep5 - ep20, decays ? "yes" : "no",
               dsp15 - dsp20, ep15 - ep20, flatter ? "yes" : "no"));
}

void complexity_ratio() {
    ExperimentConfig cfg;
    const auto table = op_count_table(cfg);
    const double add_ratio = table[2].ops.fine_additions / table[0].ops.fine_additions;
    const double mul_ratio = table[2].ops.fine_multiplications / table[0].ops.fine_multiplications;

    // Fine-stage wall clock with warm template caches, same frames for both modes.
    const auto lay = cfg.make_layout();
    EstimatorConfig prop = cfg.estimator;
    prop.mode = EstimatorMode::Proposed;
    EstimatorConfig ext = cfg.estimator;
    ext.mode = EstimatorMode::ExtendedMle;
    ChannelEstimator ep(cfg.grid, lay, prop, cfg.channel.k_max);
    ChannelEstimator ee(cfg.grid, lay, ext, cfg.channel.k_max);
    std::vector<DDFrame> frames;
    for (int t = 0; t < 60; ++t) {
        const auto seed = trial_seed(504, t);
        Rng crng = make_stream(seed, 1), brng = make_stream(seed, 2), nrng = make_stream(seed, 3);
        const auto ch = sample_channel(cfg.channel, crng);
        Bits bits(static_cast<std::size_t>(lay.data_cell_count()) * 2);
        for (auto& b : bits) b = static_cast<std::uint8_t>(brng() >> 63);
        const auto f = assemble_frame(lay, bits, cfg.grid);
        frames.push_back(demodulate(add_awgn(apply_channel(modulate(f.dd, cfg.grid), ch, cfg.grid),
                                             noise_variance_for_snr(15.0), nrng), cfg.grid));
    }
    // first pass warms the caches; the fastest later pass per mode filters scheduler noise
    double tp = 1e300, te = 1e300;
    for (int pass = 0; pass < 4; ++pass) {
        double sp = 0.0, se = 0.0;
        for (const auto& y : frames) {
            ep.estimate_all_paths(y);
            sp += ep.diagnostics().fine_stage_seconds;
            ee.estimate_all_paths(y);
            se += ee.diagnostics().fine_stage_seconds;
        }
        if (pass > 0) {
            tp = std::min(tp, sp);
            te = std::min(te, se);
        }
    }
    const double wall = te / tp;
    report(add_ratio == 7.0 && mul_ratio == 7.0 && wall >= 4.0 && wall <= 10.0, "complexity-ratio",
           fmt("op-count ratio add %.6g mul %.6g (exactly 7), fine-stage wall-clock ratio %.2f over 60 frames "
               "(range [4, 10])", add_ratio, mul_ratio, wall));
}

void determinism() {
    ExperimentConfig cfg;
    cfg.n_frames = 4;
    cfg.snr_grid_db = {5.0, 20.0};
    cfg.base_seed = 505;
    std::string reference;
    bool same = true;
    for (int threads : {1, 2, 4, 1}) {
        cfg.threads = threads;
        std::ostringstream os;
        write_csv(os, run_sweep_cells(cfg), cfg);
        const auto body = csv_body(os.str());
        if (reference.empty()) {
            reference = body;
        } else {
            same = same && body == reference;
        }
    }
    report(same, "determinism", fmt("full sweep (16 cells x 4 frames) at 1, 2, 4, 1 workers: CSV bodies %s",
                                    same ? "byte-identical" : "differ"));
}

}  // namespace

int main() {
    std::printf("# acceptance suite, version %s, %d worker(s)\n", version_string().c_str(), worker_count());
    const auto t0 = std::chrono::steady_clock::now();
    oracle_equivalence();
    pilot_phase_law();
    decomposition_round_trip();
    noiseless_ambiguity_recovery();
    velocity_bounds();
    dadp_convergence();
    standard_mle_failure();
    proposed_matches_extended();
    ep_gz_vs_dsp_floor();
    complexity_ratio();
    determinism();
    std::printf("# %d failing, total %.1f s\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
