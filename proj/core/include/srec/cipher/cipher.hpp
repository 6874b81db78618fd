#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace srec::cipher {

/// 32 bytes of pre-shared entropy. Stored on disk as one line of 64 hex
/// characters. The all-zero seed is accepted but flagged.
struct KeySeed {
    std::array<std::uint8_t, 32> bytes{};

    static KeySeed from_hex(const std::string& hex);
    std::string to_hex() const;
    bool is_all_zero() const;
};

/// Reads a key file (one 64-hex-char line). Emits a warning on stderr for the
/// all-zero seed.
KeySeed load_key_file(const std::string& path);
void save_key_file(const std::string& path, const KeySeed& seed);

/// Fresh seed from the OS entropy source.
KeySeed random_key_seed();

/// Deterministic pseudorandom bytes from (seed, stream_index). Streams with
/// distinct indices are independent; a stream is never reused across messages.
/// Backed by the ChaCha20 block function (RFC 8439) keyed by the seed, with
/// the stream index in the nonce.
std::vector<std::uint8_t> derive_keystream(const KeySeed& seed, std::size_t length,
                                           std::uint64_t stream_index);

/// c(i) = (p(i) + k(i)) mod 256.
std::vector<std::uint8_t> encrypt_bytes(const std::vector<std::uint8_t>& plaintext,
                                        const std::vector<std::uint8_t>& key);

/// p(i) = (c(i) - k(i)) mod 256. Exact inverse of encrypt_bytes.
std::vector<std::uint8_t> decrypt_bytes(const std::vector<std::uint8_t>& ciphertext,
                                        const std::vector<std::uint8_t>& key);

namespace detail {
/// One 64-byte ChaCha20 block; exposed for the RFC 8439 test vector.
void chacha20_block(const std::array<std::uint8_t, 32>& key, std::uint32_t counter,
                    const std::array<std::uint8_t, 12>& nonce, std::uint8_t out[64]);
}  // namespace detail

}  // namespace srec::cipher
