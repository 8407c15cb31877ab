#include "otfs/channel.hpp"

#include <cmath>

namespace otfs {

namespace {

// kernel[j] = doppler_kernel(k + j, N) for j = 0..N-1, via one table of
// exp(j 2 pi n k / N) and integer twiddles instead of N^2 exponentials.
std::vector<Complex> kernel_table(double k, int N) {
    std::vector<Complex> base(N);
    std::vector<Complex> twiddle(N);
    for (int n = 0; n < N; ++n) {
        base[n] = std::polar(1.0, kTwoPi * n * k / N);
        twiddle[n] = std::polar(1.0, kTwoPi * n / N);
    }
    std::vector<Complex> table(N);
    const double inv_n = 1.0 / N;
    for (int j = 0; j < N; ++j) {
        Complex acc{};
        for (int n = 0; n < N; ++n) acc += base[n] * twiddle[(n * j) % N];
        table[j] = acc * inv_n;
    }
    return table;
}

}  // namespace

std::string to_string(GainProfile profile) {
    switch (profile) {
        case GainProfile::Rayleigh: return "rayleigh";
        case GainProfile::UnitModulus: return "unit-modulus";
    }
    return "unknown";
}

GainProfile parse_gain_profile(const std::string& text) {
    if (text == "rayleigh") return GainProfile::Rayleigh;
    if (text == "unit-modulus") return GainProfile::UnitModulus;
    throw ConfigError("unknown gain profile: " + text);
}

void ChannelSpec::validate(const GridConfig& grid) const {
    if (n_paths < 1) throw ConfigError("channel needs at least one path");
    if (l_max < 0 || l_max >= grid.M) throw ConfigError("l_max must lie in [0, M)");
    if (!(k_max >= 0.0) || !std::isfinite(k_max)) throw ConfigError("k_max must be finite and >= 0");
}

ChannelRealization sample_channel(const ChannelSpec& spec, Rng& rng) {
    std::uniform_int_distribution<int> delay_dist(0, spec.l_max);
    std::uniform_real_distribution<double> doppler_dist(-spec.k_max, spec.k_max);
    std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
    const double path_var = 1.0 / spec.n_paths;
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * path_var));

    ChannelRealization ch;
    ch.paths.reserve(spec.n_paths);
    for (int i = 0; i < spec.n_paths; ++i) {
        PathParams p;
        p.delay = delay_dist(rng);
        p.doppler = spec.k_max > 0.0 ? doppler_dist(rng) : 0.0;
        switch (spec.gain_profile) {
            case GainProfile::Rayleigh: {
                const double re = gauss(rng);
                const double im = gauss(rng);
                p.gain = {re, im};
                break;
            }
            case GainProfile::UnitModulus:
                p.gain = std::polar(std::sqrt(path_var), phase_dist(rng));
                break;
        }
        ch.paths.push_back(p);
    }
    return ch;
}

Samples apply_channel(std::span<const Complex> tx, const ChannelRealization& ch,
                      const GridConfig& cfg) {
    const int len = cfg.frame_size();
    if (static_cast<int>(tx.size()) != len) {
        throw ConfigError("apply_channel: expected " + std::to_string(len) + " samples, got " +
                          std::to_string(tx.size()));
    }
    Samples rx(len, Complex{});
    for (const auto& path : ch.paths) {
        if (path.delay < 0 || path.delay >= cfg.M) throw ConfigError("path delay outside [0, M)");
        const double step = kTwoPi * path.doppler / len;
        for (int n = 0; n < len; ++n) {
            int src = n - path.delay;
            const double phase = step * src;
            if (src < 0) src += len;
            rx[n] += path.gain * std::polar(1.0, phase) * tx[src];
        }
    }
    return rx;
}

Samples add_awgn(std::span<const Complex> samples, double noise_var, Rng& rng) {
    if (noise_var < 0.0) throw ConfigError("noise variance must be >= 0");
    Samples out(samples.begin(), samples.end());
    if (noise_var == 0.0) return out;
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * noise_var));
    for (auto& s : out) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        s += Complex{re, im};
    }
    return out;
}

Complex doppler_kernel(double x, int N) {
    Complex acc{};
    for (int n = 0; n < N; ++n) acc += std::polar(1.0, kTwoPi * n * x / N);
    return acc / static_cast<double>(N);
}

Complex spreading_factor(double kappa, int N) {
    const double den = std::sin(kPi * kappa / N);
    const double asinc = std::abs(den) < 1e-300 ? static_cast<double>(N)
                                                : std::sin(kPi * kappa) / den;
    return std::polar(1.0, kPi * kappa * (N - 1) / N) * (asinc / N);
}

void add_path_response(const DDFrame& x, const PathParams& path, const GridConfig& cfg,
                       DDFrame& out) {
    const int M = cfg.M;
    const int N = cfg.N;
    if (x.delay_bins() != M || x.doppler_bins() != N || !out.same_shape(x)) {
        throw ConfigError("add_path_response: frame shape does not match grid");
    }
    if (path.delay < 0 || path.delay >= M) throw ConfigError("path delay outside [0, M)");

    const auto kernel = kernel_table(path.doppler, N);
    const double phase_step = kTwoPi * path.doppler / (static_cast<double>(M) * N);
    for (int r = 0; r < M; ++r) {
        const bool wrapped = r + path.delay >= M;
        const int m = wrapped ? r + path.delay - M : r + path.delay;
        const Complex row_phase =
            path.gain * std::polar(1.0, phase_step * (wrapped ? r - M : r));
        for (int q = 0; q < N; ++q) {
            const Complex xv = x(r, q);
            if (xv == Complex{}) continue;
            // Samples that wrap the frame come from the previous time block,
            // which twists the Doppler phase by one step.
            Complex c = row_phase * xv;
            if (wrapped) c *= std::polar(1.0, -kTwoPi * q / N);
            for (int kk = 0; kk < N; ++kk) {
                int j = q - kk;
                if (j < 0) j += N;
                out(m, kk) += c * kernel[j];
            }
        }
    }
}

DDFrame dd_channel_response(const DDFrame& x, std::span<const PathParams> paths,
                            const GridConfig& cfg) {
    DDFrame out(cfg.M, cfg.N);
    for (const auto& p : paths) add_path_response(x, p, cfg, out);
    return out;
}

Eigen::MatrixXcd effective_channel_matrix(std::span<const PathParams> paths,
                                          const GridConfig& cfg) {
    const int M = cfg.M;
    const int N = cfg.N;
    const int size = M * N;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(size, size);
    const double phase_step = kTwoPi / (static_cast<double>(M) * N);
    for (const auto& path : paths) {
        if (path.delay < 0 || path.delay >= M) throw ConfigError("path delay outside [0, M)");
        const auto kernel = kernel_table(path.doppler, N);
        for (int r = 0; r < M; ++r) {
            const bool wrapped = r + path.delay >= M;
            const int m = wrapped ? r + path.delay - M : r + path.delay;
            const Complex row_phase =
                path.gain * std::polar(1.0, phase_step * path.doppler * (wrapped ? r - M : r));
            for (int q = 0; q < N; ++q) {
                Complex c = row_phase;
                if (wrapped) c *= std::polar(1.0, -kTwoPi * q / N);
                const int col = r * N + q;
                for (int kk = 0; kk < N; ++kk) {
                    int j = q - kk;
                    if (j < 0) j += N;
                    h(m * N + kk, col) += c * kernel[j];
                }
            }
        }
    }
    return h;
}

Complex effective_channel_inner(const PathParams& a, const PathParams& b, const GridConfig& cfg) {
    if (a.delay != b.delay) return {};
    const int M = cfg.M;
    const double dk = b.doppler - a.doppler;
    const double step = kTwoPi * dk / (static_cast<double>(M) * cfg.N);
    Complex rows{};
    for (int r = 0; r < M; ++r) {
        const int shifted = r + a.delay >= M ? r - M : r;
        rows += std::polar(1.0, step * shifted);
    }
    return std::conj(a.gain) * b.gain * static_cast<double>(cfg.N) * doppler_kernel(dk, cfg.N) *
           rows;
}

double effective_channel_distance_sq(std::span<const PathParams> a,
                                     std::span<const PathParams> b, const GridConfig& cfg) {
    std::vector<PathParams> terms(a.begin(), a.end());
    for (auto p : b) {
        p.gain = -p.gain;
        terms.push_back(p);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        acc += std::real(effective_channel_inner(terms[i], terms[i], cfg));
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            acc += 2.0 * std::real(effective_channel_inner(terms[i], terms[j], cfg));
        }
    }
    return std::max(acc, 0.0);
}

DDFrame oracle_dd_response(const DDFrame& x, const ChannelRealization& ch, const GridConfig& cfg) {
    const int M = cfg.M;
    const int N = cfg.N;
    const int len = M * N;
    if (x.delay_bins() != M || x.doppler_bins() != N) {
        throw ConfigError("oracle_dd_response: frame shape does not match grid");
    }
    const double norm_mn = 1.0 / std::sqrt(static_cast<double>(len));
    const double norm_m = 1.0 / std::sqrt(static_cast<double>(M));

    // ISFFT: X_tf[n][f] = 1/sqrt(MN) sum_{l,k} X[l,k] exp(j 2 pi (n k / N - f l / M))
    std::vector<Complex> x_tf(len);
    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < M; ++f) {
            Complex acc{};
            for (int l = 0; l < M; ++l) {
                for (int k = 0; k < N; ++k) {
                    const double arg = kTwoPi * (static_cast<double>(n) * k / N -
                                                 static_cast<double>(f) * l / M);
                    acc += x(l, k) * std::polar(1.0, arg);
                }
            }
            x_tf[n * M + f] = acc * norm_mn;
        }
    }

    // Heisenberg transform, rectangular pulse: one M-point IDFT per time slot.
    std::vector<Complex> s(len);
    for (int n = 0; n < N; ++n) {
        for (int i = 0; i < M; ++i) {
            Complex acc{};
            for (int f = 0; f < M; ++f) {
                acc += x_tf[n * M + f] * std::polar(1.0, kTwoPi * f * i / static_cast<double>(M));
            }
            s[n * M + i] = acc * norm_m;
        }
    }

    std::vector<Complex> r(len);
    for (int t = 0; t < len; ++t) {
        Complex acc{};
        for (const auto& p : ch.paths) {
            const int src = ((t - p.delay) % len + len) % len;
            const double arg = kTwoPi * p.doppler * (t - p.delay) / static_cast<double>(len);
            acc += p.gain * std::polar(1.0, arg) * s[src];
        }
        r[t] = acc;
    }

    // Wigner transform: M-point DFT per time slot.
    std::vector<Complex> y_tf(len);
    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < M; ++f) {
            Complex acc{};
            for (int i = 0; i < M; ++i) {
                acc += r[n * M + i] * std::polar(1.0, -kTwoPi * f * i / static_cast<double>(M));
            }
            y_tf[n * M + f] = acc * norm_m;
        }
    }

    // SFFT
    DDFrame y(M, N);
    for (int l = 0; l < M; ++l) {
        for (int k = 0; k < N; ++k) {
            Complex acc{};
            for (int n = 0; n < N; ++n) {
                for (int f = 0; f < M; ++f) {
                    const double arg = -kTwoPi * (static_cast<double>(n) * k / N -
                                                  static_cast<double>(f) * l / M);
                    acc += y_tf[n * M + f] * std::polar(1.0, arg);
                }
            }
            y(l, k) = acc * norm_mn;
        }
    }
    return y;
}

}  // namespace otfs
