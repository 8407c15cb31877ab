#include "otfs/constellation.hpp"

namespace otfs {

std::vector<Complex> qpsk_map(std::span<const std::uint8_t> bits) {
    if (bits.size() % 2 != 0) throw ConfigError("QPSK mapping needs an even number of bits");
    std::vector<Complex> symbols(bits.size() / 2);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const int b1 = bits[2 * i] ? 1 : 0;
        const int b0 = bits[2 * i + 1] ? 1 : 0;
        symbols[i] = kQpskPoints[(b1 << 1) | b0];
    }
    return symbols;
}

Bits qpsk_demap(std::span<const Complex> symbols) {
    Bits bits(2 * symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols[i].real() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols[i].imag() < 0.0 ? 1 : 0;
    }
    return bits;
}

}  // namespace otfs
