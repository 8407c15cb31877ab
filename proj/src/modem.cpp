#include "otfs/modem.hpp"

#include <cmath>
#include <limits>

#include "otfs/constellation.hpp"

namespace otfs {

namespace {

std::vector<Complex> twiddles(int N, double sign) {
    std::vector<Complex> w(N);
    for (int t = 0; t < N; ++t) w[t] = std::polar(1.0, sign * kTwoPi * t / N);
    return w;
}

}  // namespace

Samples modulate(const DDFrame& frame, const GridConfig& cfg) {
    const int M = cfg.M;
    const int N = cfg.N;
    if (frame.delay_bins() != M || frame.doppler_bins() != N) {
        throw ConfigError("modulate: frame is " + std::to_string(frame.delay_bins()) + "x" +
                          std::to_string(frame.doppler_bins()) + ", grid is " +
                          std::to_string(M) + "x" + std::to_string(N));
    }
    const auto w = twiddles(N, +1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    Samples s(static_cast<std::size_t>(M) * N);
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            Complex acc{};
            for (int k = 0; k < N; ++k) acc += frame(m, k) * w[(n * k) % N];
            s[m + n * M] = acc * scale;
        }
    }
    return s;
}

DDFrame demodulate(std::span<const Complex> samples, const GridConfig& cfg) {
    const int M = cfg.M;
    const int N = cfg.N;
    if (static_cast<int>(samples.size()) != M * N) {
        throw ConfigError("demodulate: expected " + std::to_string(M * N) + " samples, got " +
                          std::to_string(samples.size()));
    }
    const auto w = twiddles(N, -1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    DDFrame y(M, N);
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < N; ++k) {
            Complex acc{};
            for (int n = 0; n < N; ++n) acc += samples[m + n * M] * w[(n * k) % N];
            y(m, k) = acc * scale;
        }
    }
    return y;
}

std::string to_string(PilotScheme scheme) {
    return scheme == PilotScheme::EpGz ? "ep-gz" : "dsp";
}

PilotScheme parse_pilot_scheme(const std::string& text) {
    if (text == "ep-gz") return PilotScheme::EpGz;
    if (text == "dsp") return PilotScheme::Dsp;
    throw ConfigError("unknown pilot scheme: " + text + " (expected ep-gz or dsp)");
}

int PilotLayout::data_cell_count() const {
    int count = 0;
    for (auto v : data_mask) count += v != 0;
    return count;
}

bool PilotLayout::is_pilot(int l, int k) const {
    for (const auto& p : pilots) {
        if (p.delay == l && p.doppler == k) return true;
    }
    return false;
}

DDFrame PilotLayout::pilot_frame() const {
    DDFrame xp(M, N);
    for (const auto& p : pilots) xp(p.delay, p.doppler) = p.amplitude;
    return xp;
}

double PilotLayout::max_unwrapped_spacing(const GridConfig& cfg, double k_max) {
    if (k_max <= 0.0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(cfg.M) * cfg.N / (2.0 * k_max);
}

PilotLayout build_layout(PilotScheme scheme, const GridConfig& cfg, const ChannelSpec& spec,
                         int n_pilots, double pdr_db) {
    cfg.validate();
    spec.validate(cfg);
    if (n_pilots < 1) throw ConfigError("layout needs at least one pilot");
    if (n_pilots > 1 && spec.l_max < 1) {
        throw ConfigError("pilot spacing equals l_max, so multiple pilots need l_max >= 1");
    }
    if (!std::isfinite(pdr_db)) throw ConfigError("PDR must be finite");

    const int M = cfg.M;
    const int N = cfg.N;
    const int span = (n_pilots - 1) * spec.l_max;
    const int guard_rows = span + 2 * spec.l_max + 1;
    if (scheme == PilotScheme::EpGz ? guard_rows >= M : span >= M) {
        throw ConfigError("pilot layout does not fit in " + std::to_string(M) + " delay bins");
    }
    if (span > M - spec.l_max - 2) {
        throw ConfigError("pilot delay " + std::to_string(span) + " violates l_p < M - l_max - 1");
    }
    if (n_pilots > 1 && spec.l_max >= PilotLayout::max_unwrapped_spacing(cfg, spec.k_max)) {
        throw ConfigError("adjacent pilot spacing l_max lets the pairwise phase wrap for k_max = " +
                          std::to_string(spec.k_max));
    }

    PilotLayout layout;
    layout.scheme = scheme;
    layout.M = M;
    layout.N = N;
    layout.l_max = spec.l_max;
    const double amplitude = std::sqrt(std::pow(10.0, pdr_db / 10.0));
    for (int u = 0; u < n_pilots; ++u) layout.pilots.push_back({u * spec.l_max, 0, amplitude});

    const std::size_t cells = static_cast<std::size_t>(M) * N;
    layout.guard_mask.assign(cells, 0);
    layout.data_mask.assign(cells, 1);
    if (scheme == PilotScheme::EpGz) {
        for (int d = -spec.l_max; d <= span + spec.l_max; ++d) {
            const int row = (d % M + M) % M;
            for (int k = 0; k < N; ++k) {
                layout.guard_mask[static_cast<std::size_t>(row) * N + k] = 1;
                layout.data_mask[static_cast<std::size_t>(row) * N + k] = 0;
            }
        }
    }
    for (const auto& p : layout.pilots) {
        const std::size_t idx = static_cast<std::size_t>(p.delay) * N + p.doppler;
        layout.guard_mask[idx] = 0;
        layout.data_mask[idx] = 0;
    }
    return layout;
}

FrameContents assemble_frame(const PilotLayout& layout, std::span<const std::uint8_t> bits,
                             const GridConfig& cfg) {
    if (layout.M != cfg.M || layout.N != cfg.N) throw ConfigError("layout does not match grid");
    const auto expected = static_cast<std::size_t>(layout.data_cell_count()) * cfg.bits_per_symbol();
    if (bits.size() != expected) {
        throw ConfigError("assemble_frame: expected " + std::to_string(expected) + " bits, got " +
                          std::to_string(bits.size()));
    }
    FrameContents fc;
    fc.layout = layout;
    fc.data_bits.assign(bits.begin(), bits.end());
    fc.data_symbols = qpsk_map(bits);
    fc.dd = layout.pilot_frame();
    std::size_t next = 0;
    for (int l = 0; l < cfg.M; ++l) {
        for (int k = 0; k < cfg.N; ++k) {
            if (layout.is_data(l, k)) fc.dd(l, k) = fc.data_symbols[next++];
        }
    }
    return fc;
}

std::vector<Complex> read_data_cells(const DDFrame& frame, const PilotLayout& layout) {
    std::vector<Complex> out;
    out.reserve(layout.data_cell_count());
    for (int l = 0; l < layout.M; ++l) {
        for (int k = 0; k < layout.N; ++k) {
            if (layout.is_data(l, k)) out.push_back(frame(l, k));
        }
    }
    return out;
}

}  // namespace otfs
