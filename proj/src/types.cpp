#include "otfs/types.hpp"

#include <algorithm>
#include <cmath>

namespace otfs {

DDFrame::DDFrame(int delay_bins, int doppler_bins)
    : m_(delay_bins), n_(doppler_bins) {
    if (delay_bins < 1 || doppler_bins < 1) {
        throw ConfigError("DDFrame dimensions must be positive");
    }
    cells_.assign(static_cast<std::size_t>(delay_bins) * doppler_bins, Complex{});
}

double DDFrame::squared_norm() const {
    double acc = 0.0;
    for (const auto& c : cells_) acc += std::norm(c);
    return acc;
}

double DDFrame::norm() const { return std::sqrt(squared_norm()); }

DDFrame& DDFrame::operator+=(const DDFrame& rhs) {
    if (!same_shape(rhs)) throw ConfigError("DDFrame shape mismatch");
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += rhs.cells_[i];
    return *this;
}

DDFrame& DDFrame::operator-=(const DDFrame& rhs) {
    if (!same_shape(rhs)) throw ConfigError("DDFrame shape mismatch");
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] -= rhs.cells_[i];
    return *this;
}

DDFrame& DDFrame::operator*=(Complex scale) {
    for (auto& c : cells_) c *= scale;
    return *this;
}

void DDFrame::subtract_scaled(const DDFrame& rhs, Complex scale) {
    if (!same_shape(rhs)) throw ConfigError("DDFrame shape mismatch");
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] -= scale * rhs.cells_[i];
}

Complex inner_product(const DDFrame& a, const DDFrame& b) {
    if (!a.same_shape(b)) throw ConfigError("DDFrame shape mismatch");
    const auto x = a.cells();
    const auto y = b.cells();
    // Split accumulation keeps the loop vectorizable.
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double ar = x[i].real(), ai = x[i].imag();
        const double br = y[i].real(), bi = y[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

double max_abs_difference(std::span<const Complex> a, std::span<const Complex> b) {
    if (a.size() != b.size()) throw ConfigError("length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

double max_abs_difference(const DDFrame& a, const DDFrame& b) {
    if (!a.same_shape(b)) throw ConfigError("DDFrame shape mismatch");
    return max_abs_difference(a.cells(), b.cells());
}

}  // namespace otfs
