#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otfs/channel.hpp"
#include "otfs/modem.hpp"
#include "otfs/types.hpp"

namespace otfs {

enum class DetectorAlgorithm { Mpa, Lmmse };

std::string to_string(DetectorAlgorithm algo);
DetectorAlgorithm parse_detector_algorithm(const std::string& text);

struct DetectorConfig {
    DetectorAlgorithm algorithm = DetectorAlgorithm::Mpa;
    int mpa_max_iters = 30;
    double mpa_damping = 0.6;
    double mpa_conv_tol = 1e-3;
    int doppler_trunc = 10;  // Doppler taps kept per path in the MPA graph

    void validate(const GridConfig& cfg) const;
};

/**
 * Sparse linear system y = H x + w restricted to the unknown symbols. Column c
 * lists the (observation index, coefficient) pairs of symbol c.
 */
struct SparseSystem {
    int n_obs = 0;
    std::vector<std::vector<std::pair<int, Complex>>> columns;

    int n_sym() const { return static_cast<int>(columns.size()); }
};

/**
 * Data-cell columns of the effective DD channel, keeping per path only the
 * doppler_trunc largest-magnitude Doppler taps. Observations use the
 * delay-major cell index. truncated_power receives sum_i |h_i|^2 times the
 * dropped fraction of path i's Doppler energy.
 */
SparseSystem build_detection_graph(std::span<const PathParams> paths, const PilotLayout& layout,
                                   const GridConfig& cfg, int doppler_trunc,
                                   double* truncated_power = nullptr);

struct MpaResult {
    std::vector<int> decisions;  // constellation indices
    std::vector<std::array<double, 4>> posteriors;
    int iterations = 0;
    bool converged = false;
};

/// Gaussian-approximation message passing with damping and early stopping (QPSK).
MpaResult mpa_detect(const SparseSystem& system, std::span<const Complex> y, double noise_var,
                     const DetectorConfig& det_cfg);

/// (H^H H + noise_var I)^{-1} H^H y for unit-energy symbols.
std::vector<Complex> lmmse_detect(const Eigen::MatrixXcd& h, std::span<const Complex> y,
                                  double noise_var);

struct DetectionResult {
    Bits bits;
    std::vector<Complex> symbols;
    int iterations = 0;
    bool converged = true;
};

/**
 * Cancels the known pilot contribution with the estimated channel, detects
 * the data cells and returns hard bits in the frame's data order.
 */
DetectionResult detect(const DDFrame& y, std::span<const PathParams> paths,
                       const PilotLayout& layout, const DetectorConfig& det_cfg, double noise_var,
                       const GridConfig& cfg);

}  // namespace otfs
