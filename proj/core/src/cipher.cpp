#include "srec/cipher/cipher.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

namespace srec::cipher {

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

constexpr char kHexDigits[] = "0123456789abcdef";

inline std::uint32_t rotl32(std::uint32_t v, int n) { return (v << n) | (v >> (32 - n)); }

inline void quarter_round(std::uint32_t& a, std::uint32_t& b, std::uint32_t& c, std::uint32_t& d) {
    a += b; d ^= a; d = rotl32(d, 16);
    c += d; b ^= c; b = rotl32(b, 12);
    a += b; d ^= a; d = rotl32(d, 8);
    c += d; b ^= c; b = rotl32(b, 7);
}

inline std::uint32_t load_le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_le32(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v & 0xff);
    p[1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
    p[2] = static_cast<std::uint8_t>((v >> 16) & 0xff);
    p[3] = static_cast<std::uint8_t>((v >> 24) & 0xff);
}

}  // namespace

namespace detail {

void chacha20_block(const std::array<std::uint8_t, 32>& key, std::uint32_t counter,
                    const std::array<std::uint8_t, 12>& nonce, std::uint8_t out[64]) {
    std::uint32_t state[16];
    state[0] = 0x61707865;
    state[1] = 0x3320646e;
    state[2] = 0x79622d32;
    state[3] = 0x6b206574;
    for (int i = 0; i < 8; ++i) state[4 + i] = load_le32(key.data() + 4 * i);
    state[12] = counter;
    for (int i = 0; i < 3; ++i) state[13 + i] = load_le32(nonce.data() + 4 * i);

    std::uint32_t x[16];
    std::memcpy(x, state, sizeof(x));
    for (int round = 0; round < 10; ++round) {
        quarter_round(x[0], x[4], x[8], x[12]);
        quarter_round(x[1], x[5], x[9], x[13]);
        quarter_round(x[2], x[6], x[10], x[14]);
        quarter_round(x[3], x[7], x[11], x[15]);
        quarter_round(x[0], x[5], x[10], x[15]);
        quarter_round(x[1], x[6], x[11], x[12]);
        quarter_round(x[2], x[7], x[8], x[13]);
        quarter_round(x[3], x[4], x[9], x[14]);
    }
    for (int i = 0; i < 16; ++i) store_le32(out + 4 * i, x[i] + state[i]);
}

}  // namespace detail

KeySeed KeySeed::from_hex(const std::string& hex) {
    if (hex.size() != 64)
        throw std::invalid_argument("KeySeed: expected 64 hex characters, got " +
                                    std::to_string(hex.size()));
    KeySeed seed;
    for (std::size_t i = 0; i < 32; ++i) {
        int hi = hex_nibble(hex[2 * i]);
        int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("KeySeed: invalid hex character");
        seed.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return seed;
}

std::string KeySeed::to_hex() const {
    std::string out(64, '0');
    for (std::size_t i = 0; i < 32; ++i) {
        out[2 * i] = kHexDigits[bytes[i] >> 4];
        out[2 * i + 1] = kHexDigits[bytes[i] & 0xf];
    }
    return out;
}

bool KeySeed::is_all_zero() const {
    for (auto b : bytes)
        if (b != 0) return false;
    return true;
}

KeySeed load_key_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("key file: cannot open '" + path + "'");
    std::string line;
    std::getline(is, line);
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' '))
        line.pop_back();
    KeySeed seed = KeySeed::from_hex(line);
    if (seed.is_all_zero())
        std::cerr << "warning: key file '" << path << "' holds the all-zero seed\n";
    return seed;
}

void save_key_file(const std::string& path, const KeySeed& seed) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("key file: cannot open '" + path + "' for writing");
    os << seed.to_hex() << "\n";
}

KeySeed random_key_seed() {
    std::random_device rd;
    KeySeed seed;
    for (std::size_t i = 0; i < 32; i += 4) {
        std::uint32_t v = rd();
        seed.bytes[i] = static_cast<std::uint8_t>(v & 0xff);
        seed.bytes[i + 1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
        seed.bytes[i + 2] = static_cast<std::uint8_t>((v >> 16) & 0xff);
        seed.bytes[i + 3] = static_cast<std::uint8_t>((v >> 24) & 0xff);
    }
    return seed;
}

std::vector<std::uint8_t> derive_keystream(const KeySeed& seed, std::size_t length,
                                           std::uint64_t stream_index) {
    std::vector<std::uint8_t> out(length);
    std::array<std::uint8_t, 12> nonce{};
    for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>((stream_index >> (8 * i)) & 0xff);

    std::uint8_t block[64];
    std::uint32_t counter = 0;
    std::size_t written = 0;
    while (written < length) {
        detail::chacha20_block(seed.bytes, counter++, nonce, block);
        std::size_t n = std::min<std::size_t>(64, length - written);
        std::memcpy(out.data() + written, block, n);
        written += n;
    }
    return out;
}

std::vector<std::uint8_t> encrypt_bytes(const std::vector<std::uint8_t>& plaintext,
                                        const std::vector<std::uint8_t>& key) {
    if (plaintext.size() != key.size())
        throw std::invalid_argument("encrypt_bytes: plaintext and key lengths differ");
    std::vector<std::uint8_t> out(plaintext.size());
    for (std::size_t i = 0; i < plaintext.size(); ++i)
        out[i] = static_cast<std::uint8_t>((plaintext[i] + key[i]) & 0xff);
    return out;
}

std::vector<std::uint8_t> decrypt_bytes(const std::vector<std::uint8_t>& ciphertext,
                                        const std::vector<std::uint8_t>& key) {
    if (ciphertext.size() != key.size())
        throw std::invalid_argument("decrypt_bytes: ciphertext and key lengths differ");
    std::vector<std::uint8_t> out(ciphertext.size());
    for (std::size_t i = 0; i < ciphertext.size(); ++i)
        out[i] = static_cast<std::uint8_t>((ciphertext[i] - key[i]) & 0xff);
    return out;
}

}  // namespace srec::cipher
