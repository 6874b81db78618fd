#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srec/cipher/cipher.hpp"
#include "srec/codec/codec.hpp"
#include "srec/modem/modem.hpp"
#include "srec/numkit/tensor.hpp"
#include "srec/sr/rdn.hpp"

namespace srec::harness {

/// The four experiment arms: plain transmission, encrypted transmission,
/// encrypted transmission with the receiver-side enhancer, and the
/// wrong-key eavesdropper on the encrypted stream.
enum class Variant { Plain, Encrypted, Srec, Eavesdropper };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct PipelineModels {
    const codec::CodecModel<float>* codec = nullptr;
    const sr::RdnModel<float>* enhancer = nullptr;  // required for the srec variant
};

struct RunOptions {
    Variant variant = Variant::Encrypted;
    modem::Scheme scheme = modem::Scheme::Qpsk;
    double snr_db = 10.0;
    double eta = 0.2;
    bool noiseless = false;
    cipher::KeySeed key_seed;
    std::uint64_t stream_index = 0;     // one keystream per transmitted image
    std::uint64_t noise_seed = 0;
    std::uint64_t eavesdrop_seed = 1;   // seed of the wrong keystream
    /// When set, the eavesdropper decrypts with this seed instead of a fresh
    /// one (an eavesdropper holding the correct key is the encrypted variant).
    std::optional<cipher::KeySeed> eavesdrop_key;
    std::size_t image_index = 0;
    std::size_t trial_index = 0;
};

/// Provenance and metrics of one pipeline execution.
struct RunRecord {
    std::string variant;
    std::string scheme;
    double snr_db = 0;
    double eta = 0;
    std::size_t image_index = 0;
    std::size_t trial_index = 0;
    std::uint64_t trial_seed = 0;
    double psnr_db = 0;          // NaN flags a failed point
    std::size_t byte_error_count = 0;
    std::size_t latent_byte_count = 0;
    double elapsed_ms = 0;
    std::string error;           // empty on success
};

struct RunOutput {
    RunRecord record;
    numkit::Tensor<float> reconstruction;
    std::vector<std::uint8_t> transmitted_bytes;  // post-encryption
    std::vector<std::uint8_t> received_bytes;     // post-demodulation, pre-decryption
};

/// Runs encode -> quantize -> [encrypt] -> pack -> modulate -> AWGN ->
/// demodulate -> unpack -> [decrypt] -> decode -> [enhance] and scores PSNR
/// against the original crop. Byte errors are counted pre-decryption. Stage
/// failures are rethrown with the stage name.
RunOutput run_pipeline(const numkit::Tensor<float>& image, const RunOptions& options,
                       const PipelineModels& models);

}  // namespace srec::harness
