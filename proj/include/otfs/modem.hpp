#pragma once

#include <span>
#include <string>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/grid.hpp"
#include "otfs/types.hpp"

namespace otfs {

/// OTFS with rectangular pulses: s[m + n M] = 1/sqrt(N) sum_k X[m, k] exp(j 2 pi n k / N).
Samples modulate(const DDFrame& frame, const GridConfig& cfg);

/// Exact inverse of modulate.
DDFrame demodulate(std::span<const Complex> samples, const GridConfig& cfg);

enum class PilotScheme {
    EpGz,  // embedded pilots inside a zeroed guard zone
    Dsp,   // data-surrounded pilots, no guard
};

std::string to_string(PilotScheme scheme);
PilotScheme parse_pilot_scheme(const std::string& text);

struct Pilot {
    int delay = 0;
    int doppler = 0;
    double amplitude = 1.0;
};

struct PilotLayout {
    PilotScheme scheme = PilotScheme::EpGz;
    int M = 0;
    int N = 0;
    int l_max = 0;
    std::vector<Pilot> pilots;
    std::vector<std::uint8_t> guard_mask;  // delay-major, 1 = forced zero
    std::vector<std::uint8_t> data_mask;   // delay-major, 1 = data-bearing

    int n_pilots() const { return static_cast<int>(pilots.size()); }
    int data_cell_count() const;
    bool is_guard(int l, int k) const { return guard_mask[static_cast<std::size_t>(l) * N + k] != 0; }
    bool is_data(int l, int k) const { return data_mask[static_cast<std::size_t>(l) * N + k] != 0; }
    bool is_pilot(int l, int k) const;

    /// X_p: pilot amplitudes at pilot cells, zero elsewhere.
    DDFrame pilot_frame() const;

    /// Largest pilot delay spacing whose pairwise phase cannot wrap past +-pi for |k| <= k_max.
    static double max_unwrapped_spacing(const GridConfig& cfg, double k_max);
};

/**
 * Pilots at delays u * l_max (u = 0..n_pilots-1), Doppler bin 0, amplitude
 * sqrt(PDR) for unit-energy data. EP-GZ zeroes every Doppler bin of the
 * cyclic delay span [-l_max, (n_pilots - 1) l_max + l_max] except the pilot
 * cells; DSP has no guard.
 */
PilotLayout build_layout(PilotScheme scheme, const GridConfig& cfg, const ChannelSpec& spec,
                         int n_pilots, double pdr_db);

struct FrameContents {
    DDFrame dd;
    PilotLayout layout;
    std::vector<Complex> data_symbols;
    Bits data_bits;
};

/// QPSK data in delay-major order over the data cells, pilots and zero guard.
FrameContents assemble_frame(const PilotLayout& layout, std::span<const std::uint8_t> bits,
                             const GridConfig& cfg);

/// Data-cell values of a frame in the same order assemble_frame writes them.
std::vector<Complex> read_data_cells(const DDFrame& frame, const PilotLayout& layout);

}  // namespace otfs
