#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otfs/grid.hpp"
#include "otfs/rng.hpp"
#include "otfs/types.hpp"

namespace otfs {

/// One physical path: gain, integer delay and normalized Doppler (may exceed N/2).
struct PathParams {
    Complex gain{1.0, 0.0};
    int delay = 0;
    double doppler = 0.0;
};

struct ChannelRealization {
    std::vector<PathParams> paths;
};

enum class GainProfile {
    Rayleigh,      // i.i.d. CN(0, 1/P)
    UnitModulus,   // |h| = 1/sqrt(P), uniform phase
};

std::string to_string(GainProfile profile);
GainProfile parse_gain_profile(const std::string& text);

struct ChannelSpec {
    int n_paths = 4;
    int l_max = 4;
    double k_max = 79.0;
    GainProfile gain_profile = GainProfile::Rayleigh;

    void validate(const GridConfig& grid) const;
};

/// Delays uniform on [0, l_max], Dopplers uniform on [-k_max, k_max].
ChannelRealization sample_channel(const ChannelSpec& spec, Rng& rng);

/**
 * Time-domain doubly dispersive channel over one MN-sample frame with cyclic
 * convolution:
 *   r[n] = sum_i h_i exp(j 2 pi k_i (n - l_i) / MN) tx[<n - l_i>_MN]
 * The Doppler phase is referenced at path arrival.
 */
Samples apply_channel(std::span<const Complex> tx, const ChannelRealization& ch,
                      const GridConfig& cfg);

/// Adds CN(0, noise_var) to every sample.
Samples add_awgn(std::span<const Complex> samples, double noise_var, Rng& rng);

/// Rectangular-window Doppler kernel (1/N) sum_{n<N} exp(j 2 pi n x / N).
Complex doppler_kernel(double x, int N);

/// S(kappa) = (1/N) exp(j pi kappa (N-1)/N) asinc_N(kappa), asinc_N(x) = sin(pi x) / sin(pi x / N).
Complex spreading_factor(double kappa, int N);

/**
 * Accumulates the DD-domain response of one path to x into out, using the
 * closed form of modulate -> single-path channel -> demodulate. Zero cells
 * of x are skipped, so sparse (pilot-only) frames are cheap.
 */
void add_path_response(const DDFrame& x, const PathParams& path, const GridConfig& cfg,
                       DDFrame& out);

DDFrame dd_channel_response(const DDFrame& x, std::span<const PathParams> paths,
                            const GridConfig& cfg);

/**
 * Dense MN x MN effective DD channel: vec(Y) = H vec(X) with the delay-major
 * vectorization of DDFrame. Intended for small grids and cross-checks.
 */
Eigen::MatrixXcd effective_channel_matrix(std::span<const PathParams> paths,
                                          const GridConfig& cfg);

/// trace(H_a^H H_b) for the single-path effective channels of a and b.
Complex effective_channel_inner(const PathParams& a, const PathParams& b, const GridConfig& cfg);

/// ||H(a) - H(b)||_F^2 without forming either matrix.
double effective_channel_distance_sq(std::span<const PathParams> a,
                                     std::span<const PathParams> b, const GridConfig& cfg);

/**
 * Brute-force reference for the whole link: ISFFT and Heisenberg transform
 * with rectangular pulses, the per-sample channel sum, then Wigner transform
 * and SFFT, each evaluated by direct summation. O((MN)^2); small grids only.
 */
DDFrame oracle_dd_response(const DDFrame& x, const ChannelRealization& ch, const GridConfig& cfg);

}  // namespace otfs
