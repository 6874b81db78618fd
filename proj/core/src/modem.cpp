#include "srec/modem/modem.hpp"

#include <cmath>
#include <stdexcept>

#include "srec/numkit/rng.hpp"

namespace srec::modem {

namespace {

// Gray-coded 4-PAM amplitude for a 2-bit label, in units of the level step.
// 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
double pam4_level(unsigned label) {
    switch (label & 3u) {
        case 0b00: return -3.0;
        case 0b01: return -1.0;
        case 0b11: return 1.0;
        default: return 3.0;  // 0b10
    }
}

unsigned pam4_label(double v) {
    if (v < -2.0) return 0b00;
    if (v < 0.0) return 0b01;
    if (v < 2.0) return 0b11;
    return 0b10;
}

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
const double kInvSqrt10 = 1.0 / std::sqrt(10.0);

std::vector<std::complex<double>> build_constellation(Scheme scheme) {
    switch (scheme) {
        case Scheme::Bpsk:
            return {{1.0, 0.0}, {-1.0, 0.0}};  // bit 0 -> +1, bit 1 -> -1
        case Scheme::Qpsk: {
            std::vector<std::complex<double>> pts(4);
            for (unsigned label = 0; label < 4; ++label) {
                double re = (label & 2u) ? -kInvSqrt2 : kInvSqrt2;
                double im = (label & 1u) ? -kInvSqrt2 : kInvSqrt2;
                pts[label] = {re, im};
            }
            return pts;
        }
        case Scheme::Qam16: {
            std::vector<std::complex<double>> pts(16);
            for (unsigned label = 0; label < 16; ++label) {
                double re = pam4_level(label >> 2) * kInvSqrt10;
                double im = pam4_level(label) * kInvSqrt10;
                pts[label] = {re, im};
            }
            return pts;
        }
    }
    throw std::invalid_argument("unknown scheme");
}

}  // namespace

std::size_t bits_per_symbol(Scheme scheme) {
    switch (scheme) {
        case Scheme::Bpsk: return 1;
        case Scheme::Qpsk: return 2;
        case Scheme::Qam16: return 4;
    }
    throw std::invalid_argument("unknown scheme");
}

std::string scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::Bpsk: return "bpsk";
        case Scheme::Qpsk: return "qpsk";
        case Scheme::Qam16: return "16qam";
    }
    throw std::invalid_argument("unknown scheme");
}

Scheme parse_scheme(const std::string& name) {
    if (name == "bpsk") return Scheme::Bpsk;
    if (name == "qpsk") return Scheme::Qpsk;
    if (name == "16qam" || name == "qam16") return Scheme::Qam16;
    throw std::invalid_argument("unknown modulation scheme '" + name + "'");
}

const std::vector<std::complex<double>>& constellation(Scheme scheme) {
    static const std::vector<std::complex<double>> bpsk = build_constellation(Scheme::Bpsk);
    static const std::vector<std::complex<double>> qpsk = build_constellation(Scheme::Qpsk);
    static const std::vector<std::complex<double>> qam16 = build_constellation(Scheme::Qam16);
    switch (scheme) {
        case Scheme::Bpsk: return bpsk;
        case Scheme::Qpsk: return qpsk;
        case Scheme::Qam16: return qam16;
    }
    throw std::invalid_argument("unknown scheme");
}

double ChannelConfig::noise_power() const {
    if (noiseless) return 0.0;
    return std::norm(h) * std::pow(10.0, -snr_db / 10.0);
}

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bytes) {
    std::vector<std::uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (std::uint8_t b : bytes)
        for (int i = 7; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((b >> i) & 1));
    return bits;
}

std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& bits, std::size_t byte_count) {
    if (bits.size() < byte_count * 8)
        throw std::invalid_argument("unpack_bits: need " + std::to_string(byte_count * 8) +
                                    " bits, got " + std::to_string(bits.size()));
    std::vector<std::uint8_t> bytes(byte_count, 0);
    for (std::size_t i = 0; i < byte_count; ++i)
        for (int j = 0; j < 8; ++j)
            bytes[i] = static_cast<std::uint8_t>((bytes[i] << 1) | (bits[i * 8 + j] & 1));
    return bytes;
}

SymbolFrame modulate(const std::vector<std::uint8_t>& bits, Scheme scheme) {
    const std::size_t bps = bits_per_symbol(scheme);
    const auto& table = constellation(scheme);
    SymbolFrame frame;
    frame.scheme = scheme;
    frame.payload_bit_count = bits.size();
    const std::size_t n_symbols = (bits.size() + bps - 1) / bps;
    frame.symbols.resize(n_symbols);
    for (std::size_t s = 0; s < n_symbols; ++s) {
        unsigned label = 0;
        for (std::size_t j = 0; j < bps; ++j) {
            const std::size_t idx = s * bps + j;
            const unsigned bit = idx < bits.size() ? (bits[idx] & 1) : 0;  // zero padding
            label = (label << 1) | bit;
        }
        frame.symbols[s] = table[label];
    }
    return frame;
}

SymbolFrame transmit_awgn(const SymbolFrame& frame, const ChannelConfig& channel) {
    SymbolFrame out = frame;
    const double sigma2 = channel.noise_power();
    if (sigma2 == 0.0) {
        for (auto& s : out.symbols) s *= channel.h;
        return out;
    }
    numkit::Rng rng(channel.noise_seed);
    const double comp_std = std::sqrt(sigma2 / 2.0);
    for (auto& s : out.symbols) {
        std::complex<double> n(comp_std * rng.normal(), comp_std * rng.normal());
        s = channel.h * s + n;
    }
    return out;
}

std::vector<std::uint8_t> demodulate(const SymbolFrame& frame, const ChannelConfig& channel) {
    const std::size_t bps = bits_per_symbol(frame.scheme);
    if (std::norm(channel.h) == 0.0) throw std::invalid_argument("demodulate: zero channel coefficient");
    std::vector<std::uint8_t> bits;
    bits.reserve(frame.symbols.size() * bps);
    for (const auto& raw : frame.symbols) {
        const std::complex<double> y = raw / channel.h;
        unsigned label = 0;
        switch (frame.scheme) {
            case Scheme::Bpsk:
                label = y.real() >= 0.0 ? 0u : 1u;
                break;
            case Scheme::Qpsk:
                label = (y.real() >= 0.0 ? 0u : 2u) | (y.imag() >= 0.0 ? 0u : 1u);
                break;
            case Scheme::Qam16:
                label = (pam4_label(y.real() / kInvSqrt10) << 2) | pam4_label(y.imag() / kInvSqrt10);
                break;
        }
        for (std::size_t j = 0; j < bps; ++j)
            bits.push_back(static_cast<std::uint8_t>((label >> (bps - 1 - j)) & 1));
    }
    bits.resize(frame.payload_bit_count);  // strip pad bits
    return bits;
}

double measured_ber(Scheme scheme, double snr_db, std::size_t bit_count, std::uint64_t seed) {
    numkit::Rng rng(seed);
    std::vector<std::uint8_t> bits(bit_count);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1);

    ChannelConfig channel;
    channel.snr_db = snr_db;
    channel.noise_seed = numkit::hash_mix(seed, 0x6e6f697365ULL);  // separate noise stream

    SymbolFrame frame = modulate(bits, scheme);
    SymbolFrame received = transmit_awgn(frame, channel);
    std::vector<std::uint8_t> decided = demodulate(received, channel);

    std::size_t errors = 0;
    for (std::size_t i = 0; i < bit_count; ++i)
        if (decided[i] != bits[i]) ++errors;
    return static_cast<double>(errors) / static_cast<double>(bit_count);
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double ebn0_db_from_esn0_db(Scheme scheme, double esn0_db) {
    return esn0_db - 10.0 * std::log10(static_cast<double>(bits_per_symbol(scheme)));
}

double theoretical_ber(Scheme scheme, double snr_db) {
    const double esn0 = std::pow(10.0, snr_db / 10.0);
    switch (scheme) {
        case Scheme::Bpsk:
            return q_function(std::sqrt(2.0 * esn0));
        case Scheme::Qpsk:
            // Eb/N0 = Es/N0 / 2; each rail is a BPSK at that Eb/N0.
            return q_function(std::sqrt(esn0));
        case Scheme::Qam16: {
            // Gray-coded square 16QAM, exact per-axis expression:
            // Pb = 3/4 Q(a/s) + 1/2 Q(3a/s) - 1/4 Q(5a/s), a/s = sqrt(Es/N0 / 5).
            const double arg = std::sqrt(0.2 * esn0);
            return 0.75 * q_function(arg) + 0.5 * q_function(3.0 * arg) - 0.25 * q_function(5.0 * arg);
        }
    }
    throw std::invalid_argument("unknown scheme");
}

}  // namespace srec::modem
