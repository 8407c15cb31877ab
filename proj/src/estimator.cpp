#include "otfs/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace otfs {

namespace {

// Integer Doppler candidates of [-N/2, N/2) ordered by |k|, negative first.
std::vector<int> doppler_search_order(int N) {
    const int lo = static_cast<int>(std::ceil(-0.5 * N));
    const int hi = static_cast<int>(std::ceil(0.5 * N)) - 1;
    std::vector<int> order;
    order.reserve(N);
    order.push_back(0);
    for (int mag = 1; mag <= std::max(-lo, hi); ++mag) {
        if (-mag >= lo) order.push_back(-mag);
        if (mag <= hi) order.push_back(mag);
    }
    return order;
}

int wrap(int v, int n) {
    const int r = v % n;
    return r < 0 ? r + n : r;
}

bool better_candidate(const FineSearchResult& cand, const FineSearchResult& best) {
    if (cand.metric != best.metric) return cand.metric > best.metric;
    const double ca = std::abs(cand.kappa), ba = std::abs(best.kappa);
    if (ca != ba) return ca < ba;
    return std::abs(cand.n_amb) < std::abs(best.n_amb);
}

}  // namespace

std::string to_string(EstimatorMode mode) {
    switch (mode) {
        case EstimatorMode::Proposed: return "proposed";
        case EstimatorMode::StandardMle: return "standard";
        case EstimatorMode::ExtendedMle: return "extended";
    }
    return "unknown";
}

EstimatorMode parse_estimator_mode(const std::string& text) {
    if (text == "proposed") return EstimatorMode::Proposed;
    if (text == "standard") return EstimatorMode::StandardMle;
    if (text == "extended") return EstimatorMode::ExtendedMle;
    throw ConfigError("unknown estimator mode: " + text);
}

void EstimatorConfig::validate() const {
    if (!(epsilon > 0.0) || epsilon > 0.5) throw ConfigError("epsilon must lie in (0, 0.5]");
    const double inv = 1.0 / epsilon;
    if (std::abs(inv - std::round(inv)) > 1e-9) {
        throw ConfigError("1 / epsilon must be an integer so Omega ends exactly at 0.5");
    }
    if (n_paths < 1) throw ConfigError("estimator needs n_paths >= 1");
    if (n_amb_max < 0) throw ConfigError("n_amb_max must be >= 0");
    if (!(residual_stop_fraction >= 0.0)) throw ConfigError("residual_stop_fraction must be >= 0");
}

int EstimatorConfig::search_steps() const {
    return static_cast<int>(std::lround(1.0 / epsilon));
}

std::vector<double> EstimatorConfig::search_grid() const {
    const int steps = search_steps();
    std::vector<double> omega(steps + 1);
    for (int i = 0; i <= steps; ++i) omega[i] = static_cast<double>(2 * i - steps) / (2.0 * steps);
    return omega;
}

std::vector<PathParams> to_paths(std::span<const PathEstimate> estimates) {
    std::vector<PathParams> out;
    out.reserve(estimates.size());
    for (const auto& e : estimates) out.push_back(e.as_path());
    return out;
}

CoarseEstimate coarse_localize(const DDFrame& residual, const PilotLayout& layout, int l_max) {
    if (layout.pilots.empty()) throw ConfigError("coarse_localize needs at least one pilot");
    const int M = residual.delay_bins();
    const int N = residual.doppler_bins();
    const auto order = doppler_search_order(N);
    CoarseEstimate best{0, 0, -1.0};
    for (int l = 0; l <= l_max; ++l) {
        for (int k : order) {
            double energy = 0.0;
            for (const auto& p : layout.pilots) {
                energy += std::abs(residual(wrap(l + p.delay, M), wrap(k + p.doppler, N)));
            }
            if (energy > best.energy) best = {l, k, energy};
        }
    }
    return best;
}

std::vector<PilotObservation> extract_pilots(const DDFrame& residual, const PilotLayout& layout,
                                             int delay, int doppler) {
    const int M = residual.delay_bins();
    const int N = residual.doppler_bins();
    std::vector<PilotObservation> obs;
    obs.reserve(layout.pilots.size());
    for (int u = 0; u < layout.n_pilots(); ++u) {
        const auto& p = layout.pilots[u];
        PilotObservation o;
        o.u = u;
        o.rx_delay = wrap(delay + p.delay, M);
        o.rx_doppler = wrap(doppler + p.doppler, N);
        o.value = residual(o.rx_delay, o.rx_doppler);
        obs.push_back(o);
    }
    return obs;
}

std::optional<double> pairwise_doppler_estimate(const PilotObservation& a,
                                                const PilotObservation& b,
                                                const PilotLayout& layout, const GridConfig& cfg) {
    if (a.u == b.u || a.value == Complex{} || b.value == Complex{}) return std::nullopt;
    const auto& pa = layout.pilots.at(a.u);
    const auto& pb = layout.pilots.at(b.u);
    const int spacing = pb.delay - pa.delay;
    if (spacing == 0) return std::nullopt;
    const Complex ratio = (b.value / a.value) * (pa.amplitude / pb.amplitude);
    double angle = std::arg(ratio);
    if (angle <= -kPi) angle = kPi;  // branch (-pi, pi]
    return static_cast<double>(cfg.M) * cfg.N / (kTwoPi * spacing) * angle;
}

AmbiguityResolution resolve_ambiguity(std::span<const double> pair_estimates, int k_base_int,
                                      int N) {
    if (pair_estimates.empty()) return {0, true};
    std::map<int, int> votes;
    for (double k : pair_estimates) {
        ++votes[static_cast<int>(std::lround((k - k_base_int) / static_cast<double>(N)))];
    }
    int best = 0;
    int best_count = -1;
    for (const auto& [n, count] : votes) {
        const bool wins = count > best_count ||
                          (count == best_count &&
                           (std::abs(n) < std::abs(best) || (std::abs(n) == std::abs(best) && n < best)));
        if (wins) {
            best = n;
            best_count = count;
        }
    }
    return {best, false};
}

DDFrame phase_compensate(const DDFrame& y, int n_amb) {
    DDFrame out = y;
    if (n_amb == 0) return out;
    const int M = y.delay_bins();
    const int N = y.doppler_bins();
    for (int m = 0; m < M; ++m) {
        const Complex rot = ambiguity_phase(-static_cast<long long>(n_amb), m, M);
        for (int k = 0; k < N; ++k) out(m, k) *= rot;
    }
    return out;
}

DDFrame pilot_template(int delay, double doppler, const PilotLayout& layout,
                       const GridConfig& cfg) {
    DDFrame t(cfg.M, cfg.N);
    add_path_response(layout.pilot_frame(), PathParams{{1.0, 0.0}, delay, doppler}, cfg, t);
    return t;
}

std::size_t TemplateBank::KeyHash::operator()(const Key& k) const noexcept {
    const auto a = static_cast<std::uint64_t>(k.delay);
    const auto b = static_cast<std::uint64_t>(k.doppler_steps);
    return std::hash<std::uint64_t>{}((a << 48) ^ (b * 0x9E3779B97F4A7C15ULL));
}

TemplateBank::TemplateBank(const GridConfig& cfg, const PilotLayout& layout, double quantum)
    : cfg_(cfg), layout_(layout), steps_per_unit_(std::round(1.0 / quantum)) {
    if (!(quantum > 0.0)) throw ConfigError("template quantum must be positive");
}

const DDFrame& TemplateBank::get(int delay, double doppler) {
    const Key key{delay, std::llround(doppler * steps_per_unit_)};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ++builds_;
    const double quantized = static_cast<double>(key.doppler_steps) / steps_per_unit_;
    return cache_.emplace(key, pilot_template(delay, quantized, layout_, cfg_)).first->second;
}

FineSearchResult fine_mle(const DDFrame& y_com, int delay, int k_base_int,
                          std::span<const double> omega, TemplateBank& bank) {
    if (omega.empty()) throw ConfigError("fine search grid is empty");
    FineSearchResult best{omega.front(), 0, -1.0};
    for (double kappa : omega) {
        const auto& t = bank.get(delay, k_base_int + kappa);
        const FineSearchResult cand{kappa, 0, std::abs(inner_product(t, y_com))};
        if (best.metric < 0.0 || better_candidate(cand, best)) best = cand;
    }
    return best;
}

FineSearchResult extended_fine_mle(const DDFrame& residual, int delay, int k_base_int,
                                   std::span<const double> omega, int n_amb_max,
                                   TemplateBank& bank) {
    if (omega.empty()) throw ConfigError("fine search grid is empty");
    FineSearchResult best{omega.front(), 0, -1.0};
    for (int n = -n_amb_max; n <= n_amb_max; ++n) {
        const DDFrame y_com = phase_compensate(residual, n);
        for (double kappa : omega) {
            const auto& t = bank.get(delay, k_base_int + kappa);
            const FineSearchResult cand{kappa, n, std::abs(inner_product(t, y_com))};
            if (best.metric < 0.0 || better_candidate(cand, best)) best = cand;
        }
    }
    return best;
}

Complex estimate_gain(const DDFrame& residual, int delay, double k_full, TemplateBank& bank) {
    const auto& t = bank.get(delay, k_full);
    const double energy = t.squared_norm();
    if (!(energy > 0.0)) throw ConfigError("pilot template has zero energy");
    return inner_product(t, residual) / energy;
}

ChannelEstimator::ChannelEstimator(const GridConfig& cfg, const PilotLayout& layout,
                                   EstimatorConfig est_cfg, double k_max)
    : cfg_(cfg),
      layout_(layout),
      est_cfg_(est_cfg),
      max_pair_spacing_(PilotLayout::max_unwrapped_spacing(cfg, k_max)),
      omega_((est_cfg.validate(), est_cfg.search_grid())),
      bank_(cfg, layout, est_cfg.epsilon) {
    cfg_.validate();
    if (layout.M != cfg.M || layout.N != cfg.N) throw ConfigError("layout does not match grid");
    if (layout.pilots.empty()) throw ConfigError("estimator needs at least one pilot");
}

PathEstimate ChannelEstimator::estimate_one(const DDFrame& residual) {
    const int N = cfg_.N;
    const auto coarse = coarse_localize(residual, layout_, layout_.l_max);

    PathEstimate est;
    est.delay_hat = coarse.delay;
    est.k_base_int_hat = coarse.doppler;

    if (est_cfg_.mode == EstimatorMode::Proposed) {
        const auto obs = extract_pilots(residual, layout_, coarse.delay, coarse.doppler);
        std::vector<double> pair_k;
        for (std::size_t a = 0; a < obs.size(); ++a) {
            for (std::size_t b = a + 1; b < obs.size(); ++b) {
                const int spacing = std::abs(layout_.pilots[b].delay - layout_.pilots[a].delay);
                // Wider pairs can wrap past +-pi for the configured k_max.
                if (spacing >= max_pair_spacing_) {
                    ++diag_.pairs_discarded;
                    continue;
                }
                if (auto k = pairwise_doppler_estimate(obs[a], obs[b], layout_, cfg_)) {
                    pair_k.push_back(*k);
                } else {
                    ++diag_.pairs_discarded;
                }
            }
        }
        const auto amb = resolve_ambiguity(pair_k, coarse.doppler, N);
        est.n_amb_hat = amb.n_amb;
        est.ambiguity_defaulted = amb.defaulted;
        if (amb.defaulted) ++diag_.ambiguity_defaulted;
    }

    const auto start = std::chrono::steady_clock::now();
    FineSearchResult fine;
    switch (est_cfg_.mode) {
        case EstimatorMode::Proposed: {
            const DDFrame y_com = phase_compensate(residual, est.n_amb_hat);
            fine = fine_mle(y_com, coarse.delay, coarse.doppler, omega_, bank_);
            break;
        }
        case EstimatorMode::StandardMle:
            fine = fine_mle(residual, coarse.delay, coarse.doppler, omega_, bank_);
            break;
        case EstimatorMode::ExtendedMle:
            fine = extended_fine_mle(residual, coarse.delay, coarse.doppler, omega_,
                                     est_cfg_.n_amb_max, bank_);
            est.n_amb_hat = fine.n_amb;
            break;
    }
    diag_.fine_stage_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    est.kappa_hat = fine.kappa;
    est.k_full_hat = est.k_base_int_hat + est.kappa_hat + static_cast<double>(est.n_amb_hat) * N;
    est.gain_hat = estimate_gain(residual, est.delay_hat, est.k_full_hat, bank_);
    return est;
}

std::vector<PathEstimate> ChannelEstimator::estimate_all_paths(const DDFrame& y) {
    if (y.delay_bins() != cfg_.M || y.doppler_bins() != cfg_.N) {
        throw ConfigError("received frame does not match grid");
    }
    diag_ = {};
    DDFrame residual = y;
    const double initial = residual.squared_norm();
    std::vector<PathEstimate> out;
    out.reserve(est_cfg_.n_paths);
    for (int i = 0; i < est_cfg_.n_paths; ++i) {
        if (est_cfg_.residual_stop && residual.squared_norm() < est_cfg_.residual_stop_fraction * initial) {
            diag_.stopped_early = true;
            break;
        }
        auto est = estimate_one(residual);
        residual.subtract_scaled(bank_.get(est.delay_hat, est.k_full_hat), est.gain_hat);
        out.push_back(est);
        ++diag_.paths_estimated;
    }
    return out;
}

std::vector<PathEstimate> estimate_all_paths(const DDFrame& y, const PilotLayout& layout,
                                             const EstimatorConfig& est_cfg,
                                             const GridConfig& cfg, double k_max) {
    ChannelEstimator estimator(cfg, layout, est_cfg, k_max);
    return estimator.estimate_all_paths(y);
}

OpCount op_count(const EstimatorConfig& est_cfg, const GridConfig& cfg, const PilotLayout& layout) {
    const double P = est_cfg.n_paths;
    const double Np = layout.n_pilots();
    const double M = cfg.M;
    const double N = cfg.N;
    const double lmax = layout.l_max;
    const double n_kappa = est_cfg.n_kappa();
    const double log_n = std::log2(N);
    const double log_m = std::log2(M);

    OpCount c;
    c.coarse_additions = P * Np * N * lmax;
    if (est_cfg.mode == EstimatorMode::Proposed) c.pairwise_multiplications = P * Np * Np;
    const double factor =
        P * n_kappa * (est_cfg.mode == EstimatorMode::ExtendedMle ? est_cfg.eta() : 1);
    c.fine_additions = factor * (M * N * N + N * N * log_n + 2.0 * M * N * log_m);
    c.fine_multiplications =
        factor * ((3.0 * M + M * N + lmax) * N + 0.5 * N * N * log_n + M * N * log_m);
    return c;
}

}  // namespace otfs
