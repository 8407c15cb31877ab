#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace otfs {

using Complex = std::complex<double>;
using Samples = std::vector<Complex>;
using Bits = std::vector<std::uint8_t>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Raised for invalid configuration, bad dimensions and layouts that do not fit.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * M x N delay-Doppler grid.
 *
 * Element (l, k) holds the symbol at delay bin l and Doppler bin k. Storage
 * is delay-major, so the flat index of (l, k) is l * N + k. That same order
 * is the vectorization used by effective channel matrices and data mapping.
 */
class DDFrame {
public:
    DDFrame() = default;
    DDFrame(int delay_bins, int doppler_bins);

    int delay_bins() const { return m_; }
    int doppler_bins() const { return n_; }
    std::size_t size() const { return cells_.size(); }

    Complex& operator()(int l, int k) { return cells_[static_cast<std::size_t>(l) * n_ + k]; }
    const Complex& operator()(int l, int k) const {
        return cells_[static_cast<std::size_t>(l) * n_ + k];
    }

    std::span<Complex> cells() { return cells_; }
    std::span<const Complex> cells() const { return cells_; }

    double squared_norm() const;
    double norm() const;  // Frobenius
    bool same_shape(const DDFrame& other) const { return m_ == other.m_ && n_ == other.n_; }

    DDFrame& operator+=(const DDFrame& rhs);
    DDFrame& operator-=(const DDFrame& rhs);
    DDFrame& operator*=(Complex scale);

    /// Subtracts scale * rhs in place.
    void subtract_scaled(const DDFrame& rhs, Complex scale);

    bool operator==(const DDFrame&) const = default;

private:
    int m_ = 0;
    int n_ = 0;
    std::vector<Complex> cells_;
};

/// vec(a)^H vec(b)
Complex inner_product(const DDFrame& a, const DDFrame& b);

/// Largest elementwise |a - b|.
double max_abs_difference(const DDFrame& a, const DDFrame& b);
double max_abs_difference(std::span<const Complex> a, std::span<const Complex> b);

}  // namespace otfs
