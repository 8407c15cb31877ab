#pragma once

#include <cmath>
#include <random>

#include "otfs/channel.hpp"
#include "otfs/grid.hpp"
#include "otfs/modem.hpp"
#include "otfs/rng.hpp"

namespace testutil {

inline otfs::DDFrame random_frame(int M, int N, otfs::Rng& rng) {
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    otfs::DDFrame x(M, N);
    for (auto& c : x.cells()) c = {g(rng), g(rng)};
    return x;
}

// Full link through the time domain.
inline otfs::DDFrame through_link(const otfs::DDFrame& x, const otfs::ChannelRealization& ch,
                                  const otfs::GridConfig& cfg) {
    return otfs::demodulate(otfs::apply_channel(otfs::modulate(x, cfg), ch, cfg), cfg);
}

inline otfs::GridConfig grid(int M, int N) {
    otfs::GridConfig g;
    g.M = M;
    g.N = N;
    return g;
}

// Asinc-based spreading factor written out independently of the library.
inline otfs::Complex reference_spreading(double kappa, int N) {
    if (std::abs(kappa) < 1e-15) return {1.0, 0.0};
    const double mag = std::sin(M_PI * kappa) / std::sin(M_PI * kappa / N) / N;
    return std::polar(mag, M_PI * kappa * (N - 1) / N);
}

}  // namespace testutil
