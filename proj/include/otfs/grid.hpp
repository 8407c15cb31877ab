#pragma once

#include "otfs/types.hpp"

namespace otfs {

/**
 * Static delay-Doppler grid and RF geometry.
 *
 * The symbol duration is always 1 / delta_f and is never stored.
 */
struct GridConfig {
    int M = 64;              // delay bins
    int N = 32;              // Doppler bins
    double delta_f = 15e3;   // subcarrier spacing, Hz
    double f_c = 2e9;        // carrier frequency, Hz
    int mod_order = 4;       // QPSK

    double symbol_duration() const { return 1.0 / delta_f; }
    double doppler_resolution() const { return 1.0 / (N * symbol_duration()); }
    double delay_resolution() const { return 1.0 / (M * delta_f); }
    int frame_size() const { return M * N; }
    int bits_per_symbol() const;

    /// Throws ConfigError if any invariant is violated.
    void validate() const;
};

/// k = k_base + n_amb * N with k_base = k_base_int + kappa.
struct DopplerDecomposition {
    double k_base = 0.0;   // in [-N/2, N/2)
    int k_base_int = 0;    // nearest integer to k_base, kappa in [-0.5, 0.5)
    double kappa = 0.0;
    int n_amb = 0;         // wrapped grid periods

    double recompose(int N) const { return k_base + static_cast<double>(n_amb) * N; }
};

DopplerDecomposition decompose_doppler(double k, int N);

/// Largest |v| (m/s) whose normalized Doppler stays inside the fundamental range.
double max_unambiguous_velocity(const GridConfig& cfg);

double velocity_to_normalized_doppler(double velocity, const GridConfig& cfg);

/// exp(j 2 pi n_amb m / M); requires 0 <= m < M.
Complex ambiguity_phase(long long n_amb, int m, int M);

}  // namespace otfs
