#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace srec::modem {

enum class Scheme { Bpsk, Qpsk, Qam16 };

std::size_t bits_per_symbol(Scheme scheme);
std::string scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);  // "bpsk" | "qpsk" | "16qam"

/// Gray-mapped constellation, indexed by the bit label (MSB first). Every
/// table is analytically normalized to unit average symbol energy.
const std::vector<std::complex<double>>& constellation(Scheme scheme);

/// Complex baseband symbols plus the framing needed to strip pad bits.
struct SymbolFrame {
    std::vector<std::complex<double>> symbols;
    std::size_t payload_bit_count = 0;
    Scheme scheme = Scheme::Bpsk;
};

/// AWGN channel description. Noise power sigma^2 = |h|^2 * 10^(-snr_db/10)
/// for unit symbol energy; snr_db is symbol SNR Es/N0.
struct ChannelConfig {
    double snr_db = 10.0;
    std::complex<double> h{1.0, 0.0};
    std::uint64_t noise_seed = 0;
    bool noiseless = false;

    double noise_power() const;  // sigma^2
};

/// MSB-first bit packing.
std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& bits, std::size_t byte_count);

/// Bits are zero-padded to a symbol boundary; the pad length is recoverable
/// from payload_bit_count.
SymbolFrame modulate(const std::vector<std::uint8_t>& bits, Scheme scheme);

/// y = h * s + n with n ~ CN(0, sigma^2), per-component variance sigma^2 / 2.
SymbolFrame transmit_awgn(const SymbolFrame& frame, const ChannelConfig& channel);

/// Coherent hard decision: divide by h, then minimum-distance slicing.
/// Pad bits are stripped.
std::vector<std::uint8_t> demodulate(const SymbolFrame& frame, const ChannelConfig& channel);

/// Monte Carlo bit error rate over random payload bits.
double measured_ber(Scheme scheme, double snr_db, std::size_t bit_count, std::uint64_t seed);

/// Closed-form BER at symbol SNR snr_db. BPSK/QPSK: Q(sqrt(2 Eb/N0)).
/// 16QAM: exact Gray-coded square-QAM expression (the (3/4) Q term plus the
/// higher-order crossing corrections).
double theoretical_ber(Scheme scheme, double snr_db);

/// Eb/N0 = Es/N0 - 10 log10(bits per symbol).
double ebn0_db_from_esn0_db(Scheme scheme, double esn0_db);

/// Gaussian tail probability Q(x).
double q_function(double x);

}  // namespace srec::modem
