#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/grid.hpp"
#include "otfs/modem.hpp"
#include "otfs/types.hpp"

namespace otfs {

enum class EstimatorMode {
    Proposed,     // pilot-pair ambiguity detection, then compensated fine search
    StandardMle,  // assumes no ambiguity
    ExtendedMle,  // exhaustive joint search over fractional Doppler and ambiguity
};

std::string to_string(EstimatorMode mode);
EstimatorMode parse_estimator_mode(const std::string& text);

struct EstimatorConfig {
    double epsilon = 0.1;  // fine search step
    int n_paths = 4;
    int n_amb_max = 3;     // Extended MLE search bound
    EstimatorMode mode = EstimatorMode::Proposed;
    bool residual_stop = false;            // stop early once the residual is small
    double residual_stop_fraction = 0.01;  // of the initial residual energy

    void validate() const;
    int search_steps() const;  // 1 / epsilon
    int n_kappa() const { return search_steps() + 1; }
    int eta() const { return 2 * n_amb_max + 1; }

    /// Omega = {-0.5, -0.5 + eps, ..., 0.5}
    std::vector<double> search_grid() const;
};

struct PathEstimate {
    Complex gain_hat{};
    int delay_hat = 0;
    int k_base_int_hat = 0;
    double kappa_hat = 0.0;
    int n_amb_hat = 0;
    double k_full_hat = 0.0;  // k_base_int_hat + kappa_hat + n_amb_hat * N
    bool ambiguity_defaulted = false;

    PathParams as_path() const { return {gain_hat, delay_hat, k_full_hat}; }
};

std::vector<PathParams> to_paths(std::span<const PathEstimate> estimates);

struct CoarseEstimate {
    int delay = 0;
    int doppler = 0;  // in [-N/2, N/2)
    double energy = 0.0;
};

struct PilotObservation {
    int u = 0;
    Complex value{};
    int rx_delay = 0;
    int rx_doppler = 0;
};

struct AmbiguityResolution {
    int n_amb = 0;
    bool defaulted = false;  // no usable pilot pair
};

/**
 * Non-coherent pilot energy search over delay [0, l_max] and Doppler
 * [-N/2, N/2). Ties go to the smallest delay, then the smallest |Doppler|,
 * then the negative Doppler.
 */
CoarseEstimate coarse_localize(const DDFrame& residual, const PilotLayout& layout, int l_max);

std::vector<PilotObservation> extract_pilots(const DDFrame& residual, const PilotLayout& layout,
                                             int delay, int doppler);

/// Total normalized Doppler from the phase of one pilot pair; nullopt if either value is zero.
std::optional<double> pairwise_doppler_estimate(const PilotObservation& a,
                                                const PilotObservation& b,
                                                const PilotLayout& layout, const GridConfig& cfg);

/// Per-pair round((k_pair - K) / N), then the mode; ties to smallest |n|, negative first.
AmbiguityResolution resolve_ambiguity(std::span<const double> pair_estimates, int k_base_int,
                                      int N);

/// Multiplies row m by exp(-j 2 pi n_amb m / M).
DDFrame phase_compensate(const DDFrame& y, int n_amb);

/// DD response of the pilot-only frame through a unit-gain path (delay, doppler).
DDFrame pilot_template(int delay, double doppler, const PilotLayout& layout,
                       const GridConfig& cfg);

/**
 * Cache of pilot templates keyed by (delay, round(doppler / quantum)). The
 * cached template is evaluated at the quantized Doppler. Not thread-safe;
 * use one bank per estimator instance.
 */
class TemplateBank {
public:
    TemplateBank(const GridConfig& cfg, const PilotLayout& layout, double quantum);

    const DDFrame& get(int delay, double doppler);
    std::size_t size() const { return cache_.size(); }
    std::size_t builds() const { return builds_; }

private:
    struct Key {
        int delay;
        long long doppler_steps;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    GridConfig cfg_;
    PilotLayout layout_;
    double steps_per_unit_;
    std::unordered_map<Key, DDFrame, KeyHash> cache_;
    std::size_t builds_ = 0;
};

struct FineSearchResult {
    double kappa = 0.0;
    int n_amb = 0;
    double metric = 0.0;
};

/// argmax over Omega of |<t(l, K + kappa), Y_com>|; ties to smaller |kappa|.
FineSearchResult fine_mle(const DDFrame& y_com, int delay, int k_base_int,
                          std::span<const double> omega, TemplateBank& bank);

/**
 * Joint search over kappa in Omega and n in [-n_amb_max, n_amb_max], each
 * ambiguity candidate scored on its own compensated residual. Ties go to
 * smaller |kappa|, then smaller |n|.
 */
FineSearchResult extended_fine_mle(const DDFrame& residual, int delay, int k_base_int,
                                   std::span<const double> omega, int n_amb_max,
                                   TemplateBank& bank);

/// <t, Y_res> / <t, t> with t = t(delay, k_full) on the uncompensated residual.
Complex estimate_gain(const DDFrame& residual, int delay, double k_full, TemplateBank& bank);

struct EstimatorDiagnostics {
    double fine_stage_seconds = 0.0;
    int paths_estimated = 0;
    int ambiguity_defaulted = 0;
    int pairs_discarded = 0;
    bool stopped_early = false;
};

/**
 * Per-frame successive-interference-cancellation estimator. Holds a private
 * template cache, so one instance serves one thread; frames may be reused
 * sequentially on the same instance.
 */
class ChannelEstimator {
public:
    ChannelEstimator(const GridConfig& cfg, const PilotLayout& layout, EstimatorConfig est_cfg,
                     double k_max);

    std::vector<PathEstimate> estimate_all_paths(const DDFrame& y);

    const EstimatorDiagnostics& diagnostics() const { return diag_; }
    const EstimatorConfig& config() const { return est_cfg_; }
    TemplateBank& templates() { return bank_; }

private:
    PathEstimate estimate_one(const DDFrame& residual);

    GridConfig cfg_;
    PilotLayout layout_;
    EstimatorConfig est_cfg_;
    double max_pair_spacing_;
    std::vector<double> omega_;
    TemplateBank bank_;
    EstimatorDiagnostics diag_;
};

std::vector<PathEstimate> estimate_all_paths(const DDFrame& y, const PilotLayout& layout,
                                             const EstimatorConfig& est_cfg,
                                             const GridConfig& cfg, double k_max);

/// Closed-form complex operation counts for estimating all paths.
struct OpCount {
    double coarse_additions = 0.0;
    double pairwise_multiplications = 0.0;
    double fine_additions = 0.0;
    double fine_multiplications = 0.0;

    double total_additions() const { return coarse_additions + fine_additions; }
    double total_multiplications() const { return pairwise_multiplications + fine_multiplications; }
};

OpCount op_count(const EstimatorConfig& est_cfg, const GridConfig& cfg, const PilotLayout& layout);

}  // namespace otfs
