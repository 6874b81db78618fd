#include "srec/harness/pipeline.hpp"

#include <chrono>
#include <stdexcept>

#include "srec/harness/metrics.hpp"
#include "srec/numkit/layers.hpp"

namespace srec::harness {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Plain: return "plain";
        case Variant::Encrypted: return "encrypted";
        case Variant::Srec: return "srec";
        case Variant::Eavesdropper: return "eavesdropper";
    }
    throw std::invalid_argument("unknown variant");
}

Variant parse_variant(const std::string& name) {
    if (name == "plain") return Variant::Plain;
    if (name == "encrypted") return Variant::Encrypted;
    if (name == "srec") return Variant::Srec;
    if (name == "eavesdropper") return Variant::Eavesdropper;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

namespace {

template <typename F>
auto stage(const char* name, F&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage '") + name + "': " + e.what());
    }
}

}  // namespace

RunOutput run_pipeline(const numkit::Tensor<float>& image, const RunOptions& options,
                       const PipelineModels& models) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!models.codec) throw std::invalid_argument("run_pipeline: codec model missing");
    const bool enhance = options.variant == Variant::Srec;
    if (enhance && !models.enhancer)
        throw std::invalid_argument("run_pipeline: srec variant needs the enhancer model");
    const bool encrypted = options.variant != Variant::Plain;

    if (image.rank() != 3 || image.shape[0] != 3)
        throw std::invalid_argument("run_pipeline: image must be 3 x H x W");

    // The srec variant transmits at reduced resolution and upscales back.
    const std::size_t scale = enhance ? models.enhancer->config().scale : 1;
    numkit::Tensor<float> source = image;
    if (scale == 2) {
        if (image.shape[1] % 32 != 0 || image.shape[2] % 32 != 0)
            throw std::invalid_argument("run_pipeline: srec at scale 2 needs extents divisible by 32");
        source = numkit::resample(image, numkit::ResampleDir::Down);
    }

    codec::RateConfig rate;
    rate.eta = options.eta;
    rate.height = source.shape[1];
    rate.width = source.shape[2];

    auto latent = stage("encode", [&] { return models.codec->encode(source, rate); });
    auto plain_bytes = stage("quantize", [&] { return codec::quantize(latent, rate); });

    std::vector<std::uint8_t> keystream;
    std::vector<std::uint8_t> tx_bytes = plain_bytes.bytes;
    if (encrypted) {
        keystream = stage("derive_keystream", [&] {
            return cipher::derive_keystream(options.key_seed, plain_bytes.bytes.size(),
                                            options.stream_index);
        });
        tx_bytes = stage("encrypt", [&] { return cipher::encrypt_bytes(plain_bytes.bytes, keystream); });
    }

    modem::ChannelConfig channel;
    channel.snr_db = options.snr_db;
    channel.noise_seed = options.noise_seed;
    channel.noiseless = options.noiseless;

    auto bits = stage("pack_bits", [&] { return modem::pack_bits(tx_bytes); });
    auto frame = stage("modulate", [&] { return modem::modulate(bits, options.scheme); });
    auto received_frame = stage("transmit_awgn", [&] { return modem::transmit_awgn(frame, channel); });
    auto rx_bits = stage("demodulate", [&] { return modem::demodulate(received_frame, channel); });
    auto rx_bytes = stage("unpack_bits", [&] { return modem::unpack_bits(rx_bits, tx_bytes.size()); });

    std::size_t byte_errors = 0;
    for (std::size_t i = 0; i < tx_bytes.size(); ++i)
        if (tx_bytes[i] != rx_bytes[i]) ++byte_errors;

    codec::LatentBytes received_latent;
    received_latent.rate = rate;
    if (encrypted) {
        const std::vector<std::uint8_t>* key = &keystream;
        std::vector<std::uint8_t> wrong_key;
        if (options.variant == Variant::Eavesdropper) {
            // Fresh keystream from an unrelated seed: the eavesdropper holds
            // the models but not the key.
            cipher::KeySeed eve_seed;
            if (options.eavesdrop_key) {
                eve_seed = *options.eavesdrop_key;
            } else {
                std::uint64_t state = options.eavesdrop_seed;
                for (auto& b : eve_seed.bytes)
                    b = static_cast<std::uint8_t>(numkit::splitmix64(state) & 0xff);
            }
            wrong_key = cipher::derive_keystream(eve_seed, rx_bytes.size(), options.stream_index);
            key = &wrong_key;
        }
        received_latent.bytes = stage("decrypt", [&] { return cipher::decrypt_bytes(rx_bytes, *key); });
    } else {
        received_latent.bytes = rx_bytes;
    }

    auto reconstruction = stage("decode", [&] { return models.codec->decode(received_latent); });
    if (enhance)
        reconstruction = stage("enhance", [&] { return models.enhancer->forward(reconstruction); });

    RunOutput out;
    out.record.variant = variant_name(options.variant);
    out.record.scheme = modem::scheme_name(options.scheme);
    out.record.snr_db = options.snr_db;
    out.record.eta = options.eta;
    out.record.image_index = options.image_index;
    out.record.trial_index = options.trial_index;
    out.record.trial_seed = options.noise_seed;
    out.record.byte_error_count = byte_errors;
    out.record.latent_byte_count = tx_bytes.size();
    out.record.psnr_db = stage("psnr", [&] { return psnr(image, reconstruction); });
    out.reconstruction = std::move(reconstruction);
    out.transmitted_bytes = std::move(tx_bytes);
    out.received_bytes = std::move(rx_bytes);
    out.record.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace srec::harness
