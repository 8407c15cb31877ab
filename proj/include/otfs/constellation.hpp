#pragma once

#include <span>

#include "otfs/types.hpp"

namespace otfs {

/// Gray-mapped unit-energy QPSK points, indexed by (b1 << 1) | b0.
inline constexpr double kQpskScale = 0.70710678118654752440;
inline const Complex kQpskPoints[4] = {
    {kQpskScale, kQpskScale},
    {kQpskScale, -kQpskScale},
    {-kQpskScale, kQpskScale},
    {-kQpskScale, -kQpskScale},
};

/// Bit pairs (b1, b0) -> ((1 - 2 b1) + j (1 - 2 b0)) / sqrt(2). Needs an even count.
std::vector<Complex> qpsk_map(std::span<const std::uint8_t> bits);

/// Nearest-point hard decisions, two bits per symbol.
Bits qpsk_demap(std::span<const Complex> symbols);

}  // namespace otfs
