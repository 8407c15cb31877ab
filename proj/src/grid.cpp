#include "otfs/grid.hpp"

#include <bit>
#include <cassert>
#include <cmath>

namespace otfs {

int GridConfig::bits_per_symbol() const {
    return std::countr_zero(static_cast<unsigned>(mod_order));
}

void GridConfig::validate() const {
    if (M < 2 || N < 2) throw ConfigError("grid needs M >= 2 and N >= 2");
    if (!(delta_f > 0.0) || !std::isfinite(delta_f)) throw ConfigError("delta_f must be positive");
    if (!(f_c > 0.0) || !std::isfinite(f_c)) throw ConfigError("f_c must be positive");
    if (mod_order != 4) throw ConfigError("only QPSK (mod_order = 4) is supported");
}

DopplerDecomposition decompose_doppler(double k, int N) {
    const double n = static_cast<double>(N);
    const double half = 0.5 * n;
    auto wraps = static_cast<int>(std::floor((k + half) / n));
    double base = k - wraps * n;
    // floor() of a rounded quotient can land one period off at the edges
    while (base >= half) {
        ++wraps;
        base = k - wraps * n;
    }
    while (base < -half) {
        --wraps;
        base = k - wraps * n;
    }

    DopplerDecomposition d;
    d.k_base = base;
    d.n_amb = wraps;
    d.k_base_int = static_cast<int>(std::floor(base + 0.5));
    d.kappa = base - d.k_base_int;
    return d;
}

double max_unambiguous_velocity(const GridConfig& cfg) {
    return 0.5 * kSpeedOfLight * (cfg.delta_f / cfg.f_c);
}

double velocity_to_normalized_doppler(double velocity, const GridConfig& cfg) {
    return velocity * cfg.f_c / kSpeedOfLight * cfg.N * cfg.symbol_duration();
}

Complex ambiguity_phase(long long n_amb, int m, int M) {
    assert(m >= 0 && m < M);
    // Reduce the integer product first so the phase is exactly periodic in n_amb.
    long long r = (n_amb % M) * m % M;
    if (r < 0) r += M;
    return std::polar(1.0, kTwoPi * static_cast<double>(r) / M);
}

}  // namespace otfs
