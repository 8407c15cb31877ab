#include "otfs/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <numeric>

#include "otfs/constellation.hpp"

namespace otfs {

std::string to_string(DetectorAlgorithm algo) {
    return algo == DetectorAlgorithm::Mpa ? "mpa" : "lmmse";
}

DetectorAlgorithm parse_detector_algorithm(const std::string& text) {
    if (text == "mpa") return DetectorAlgorithm::Mpa;
    if (text == "lmmse") return DetectorAlgorithm::Lmmse;
    throw ConfigError("unknown detector algorithm: " + text);
}

void DetectorConfig::validate(const GridConfig& cfg) const {
    if (mpa_max_iters < 1) throw ConfigError("mpa_max_iters must be >= 1");
    if (!(mpa_damping > 0.0 && mpa_damping <= 1.0)) throw ConfigError("mpa_damping must lie in (0, 1]");
    if (!(mpa_conv_tol >= 0.0)) throw ConfigError("mpa_conv_tol must be >= 0");
    if (doppler_trunc < 1 || doppler_trunc > cfg.N) throw ConfigError("doppler_trunc must lie in [1, N]");
}

SparseSystem build_detection_graph(std::span<const PathParams> paths, const PilotLayout& layout,
                                   const GridConfig& cfg, int doppler_trunc,
                                   double* truncated_power) {
    const int M = cfg.M;
    const int N = cfg.N;
    const int keep = std::clamp(doppler_trunc, 1, N);

    struct PathTaps {
        PathParams path;
        std::vector<int> offsets;  // q - k' (mod N) of the retained taps
        std::vector<Complex> kernel;
    };
    std::vector<PathTaps> taps;
    double dropped = 0.0;
    for (const auto& p : paths) {
        PathTaps t{p, {}, std::vector<Complex>(N)};
        for (int j = 0; j < N; ++j) t.kernel[j] = doppler_kernel(p.doppler + j, N);
        std::vector<int> idx(N);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::abs(t.kernel[a]) > std::abs(t.kernel[b]);
        });
        idx.resize(keep);
        double kept = 0.0;
        for (int j : idx) kept += std::norm(t.kernel[j]);
        dropped += std::norm(p.gain) * std::max(0.0, 1.0 - kept);
        t.offsets = std::move(idx);
        taps.push_back(std::move(t));
    }
    if (truncated_power) *truncated_power = dropped;

    SparseSystem sys;
    sys.n_obs = M * N;
    const double phase_step = kTwoPi / (static_cast<double>(M) * N);
    for (int r = 0; r < M; ++r) {
        for (int q = 0; q < N; ++q) {
            if (!layout.is_data(r, q)) continue;
            std::vector<std::pair<int, Complex>> col;
            for (const auto& t : taps) {
                const bool wrapped = r + t.path.delay >= M;
                const int m = wrapped ? r + t.path.delay - M : r + t.path.delay;
                Complex c = t.path.gain *
                            std::polar(1.0, phase_step * t.path.doppler * (wrapped ? r - M : r));
                if (wrapped) c *= std::polar(1.0, -kTwoPi * q / N);
                for (int j : t.offsets) {
                    int kk = q - j;
                    if (kk < 0) kk += N;
                    col.emplace_back(m * N + kk, c * t.kernel[j]);
                }
            }
            std::sort(col.begin(), col.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<std::pair<int, Complex>> merged;
            for (const auto& e : col) {
                if (!merged.empty() && merged.back().first == e.first) {
                    merged.back().second += e.second;
                } else {
                    merged.push_back(e);
                }
            }
            sys.columns.push_back(std::move(merged));
        }
    }
    return sys;
}

MpaResult mpa_detect(const SparseSystem& system, std::span<const Complex> y, double noise_var,
                     const DetectorConfig& det_cfg) {
    if (!(noise_var > 0.0)) throw ConfigError("MPA needs a positive noise variance");
    if (static_cast<int>(y.size()) != system.n_obs) throw ConfigError("observation length mismatch");
    constexpr int Q = 4;
    const int n_sym = system.n_sym();

    // Flatten the edges column by column.
    std::vector<int> col_start(n_sym + 1, 0);
    for (int c = 0; c < n_sym; ++c) col_start[c + 1] = col_start[c] + static_cast<int>(system.columns[c].size());
    const int n_edges = col_start[n_sym];
    std::vector<int> edge_obs(n_edges);
    std::vector<Complex> edge_h(n_edges);
    for (int c = 0; c < n_sym; ++c) {
        int e = col_start[c];
        for (const auto& [d, h] : system.columns[c]) {
            edge_obs[e] = d;
            edge_h[e] = h;
            ++e;
        }
    }

    std::vector<std::array<double, Q>> msg(n_edges);  // symbol -> observation
    for (auto& m : msg) m.fill(1.0 / Q);
    std::vector<std::array<double, Q>> post(n_sym);
    for (auto& p : post) p.fill(1.0 / Q);

    std::vector<Complex> edge_mean(n_edges);
    std::vector<double> edge_var(n_edges);
    std::vector<Complex> obs_mean(system.n_obs);
    std::vector<double> obs_var(system.n_obs);
    std::vector<std::array<double, Q>> edge_ll;

    MpaResult result;
    result.decisions.assign(n_sym, 0);
    std::vector<int> current(n_sym, 0);
    double best_confidence = -1.0;

    for (int iter = 1; iter <= det_cfg.mpa_max_iters; ++iter) {
        std::fill(obs_mean.begin(), obs_mean.end(), Complex{});
        std::fill(obs_var.begin(), obs_var.end(), 0.0);
        for (int e = 0; e < n_edges; ++e) {
            Complex mean{};
            double power = 0.0;
            for (int a = 0; a < Q; ++a) {
                mean += msg[e][a] * kQpskPoints[a];
                power += msg[e][a];  // |s_a|^2 = 1
            }
            edge_mean[e] = mean;
            edge_var[e] = std::max(0.0, power - std::norm(mean));
            obs_mean[edge_obs[e]] += edge_h[e] * mean;
            obs_var[edge_obs[e]] += std::norm(edge_h[e]) * edge_var[e];
        }

        double max_change = 0.0;
        int confident = 0;
        for (int c = 0; c < n_sym; ++c) {
            const int begin = col_start[c];
            const int end = col_start[c + 1];
            edge_ll.resize(end - begin);
            std::array<double, Q> total{};
            for (int e = begin; e < end; ++e) {
                const int d = edge_obs[e];
                const Complex h = edge_h[e];
                const Complex mu = obs_mean[d] - h * edge_mean[e];
                const double var =
                    std::max(obs_var[d] - std::norm(h) * edge_var[e], 0.0) + noise_var;
                const Complex centred = y[d] - mu;
                auto& ll = edge_ll[e - begin];
                for (int a = 0; a < Q; ++a) {
                    ll[a] = -std::norm(centred - h * kQpskPoints[a]) / var;
                    total[a] += ll[a];
                }
            }

            const double peak = *std::max_element(total.begin(), total.end());
            std::array<double, Q> p{};
            double sum = 0.0;
            for (int a = 0; a < Q; ++a) sum += p[a] = std::exp(total[a] - peak);
            double top = 0.0;
            int arg = 0;
            for (int a = 0; a < Q; ++a) {
                p[a] /= sum;
                max_change = std::max(max_change, std::abs(p[a] - post[c][a]));
                if (p[a] > top) {
                    top = p[a];
                    arg = a;
                }
            }
            post[c] = p;
            current[c] = arg;
            if (top > 0.99) ++confident;

            for (int e = begin; e < end; ++e) {
                const auto& ll = edge_ll[e - begin];
                std::array<double, Q> ext{};
                double ext_peak = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < Q; ++a) ext_peak = std::max(ext_peak, ext[a] = total[a] - ll[a]);
                double ext_sum = 0.0;
                for (int a = 0; a < Q; ++a) ext_sum += ext[a] = std::exp(ext[a] - ext_peak);
                for (int a = 0; a < Q; ++a) {
                    msg[e][a] = det_cfg.mpa_damping * (ext[a] / ext_sum) +
                                (1.0 - det_cfg.mpa_damping) * msg[e][a];
                }
            }
        }

        result.iterations = iter;
        const double confidence = n_sym > 0 ? static_cast<double>(confident) / n_sym : 1.0;
        if (confidence >= best_confidence) {
            best_confidence = confidence;
            result.decisions = current;
        }
        if (max_change < det_cfg.mpa_conv_tol) {
            result.converged = true;
            result.decisions = current;
            break;
        }
    }
    result.posteriors = std::move(post);
    return result;
}

std::vector<Complex> lmmse_detect(const Eigen::MatrixXcd& h, std::span<const Complex> y,
                                  double noise_var) {
    if (static_cast<Eigen::Index>(y.size()) != h.rows()) throw ConfigError("observation length mismatch");
    const Eigen::Map<const Eigen::VectorXcd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::MatrixXcd gram = h.adjoint() * h;
    gram.diagonal().array() += noise_var;
    const Eigen::LDLT<Eigen::MatrixXcd> solver(gram);
    if (solver.info() != Eigen::Success || !solver.isPositive() || !(solver.rcond() > 1e-14)) {
        throw std::runtime_error("LMMSE system is singular");
    }
    const Eigen::VectorXcd x = solver.solve(h.adjoint() * yv);
    if (!x.allFinite()) throw std::runtime_error("LMMSE system is singular");
    return {x.data(), x.data() + x.size()};
}

DetectionResult detect(const DDFrame& y, std::span<const PathParams> paths,
                       const PilotLayout& layout, const DetectorConfig& det_cfg, double noise_var,
                       const GridConfig& cfg) {
    if (!(noise_var > 0.0)) throw ConfigError("detect needs noise_var > 0");
    if (paths.empty()) throw ConfigError("detect needs at least one path estimate");
    det_cfg.validate(cfg);

    DDFrame clean = y;
    clean -= dd_channel_response(layout.pilot_frame(), paths, cfg);
    const auto obs = clean.cells();

    DetectionResult out;
    if (det_cfg.algorithm == DetectorAlgorithm::Mpa) {
        double truncated = 0.0;
        const auto graph = build_detection_graph(paths, layout, cfg, det_cfg.doppler_trunc, &truncated);
        const auto mpa = mpa_detect(graph, obs, noise_var + truncated, det_cfg);
        out.symbols.reserve(mpa.decisions.size());
        for (int idx : mpa.decisions) out.symbols.push_back(kQpskPoints[idx]);
        out.iterations = mpa.iterations;
        out.converged = mpa.converged;
    } else {
        const auto full = effective_channel_matrix(paths, cfg);
        std::vector<Eigen::Index> cols;
        for (int l = 0; l < cfg.M; ++l) {
            for (int k = 0; k < cfg.N; ++k) {
                if (layout.is_data(l, k)) cols.push_back(static_cast<Eigen::Index>(l) * cfg.N + k);
            }
        }
        Eigen::MatrixXcd h(full.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < cols.size(); ++i) h.col(static_cast<Eigen::Index>(i)) = full.col(cols[i]);
        out.symbols = lmmse_detect(h, obs, noise_var);
    }
    out.bits = qpsk_demap(out.symbols);
    return out;
}

}  // namespace otfs
