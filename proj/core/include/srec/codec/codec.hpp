#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srec/numkit/checkpoint.hpp"
#include "srec/numkit/layers.hpp"
#include "srec/numkit/optim.hpp"
#include "srec/numkit/rng.hpp"
#include "srec/numkit/tensor.hpp"

namespace srec::codec {

/// Bandwidth knob: eta converts source size into latent bytes via
/// latent_byte_count = ceil(eta * 3 H W / 4).
struct RateConfig {
    double eta = 0.2;
    std::size_t height = 64;
    std::size_t width = 64;

    std::size_t latent_byte_count() const;
    std::size_t grid_height() const { return height / 16; }
    std::size_t grid_width() const { return width / 16; }
    void validate() const;
};

/// Quantized semantic latent; the cipher's plaintext.
struct LatentBytes {
    std::vector<std::uint8_t> bytes;
    RateConfig rate;
};

/// b = round((v + 1) / 2 * 255) after clamping v to [-1, 1].
template <typename S>
LatentBytes quantize(const numkit::Tensor<S>& latent, const RateConfig& rate);

/// v = 2 b / 255 - 1, as a 1-D tensor.
template <typename S>
numkit::Tensor<S> dequantize(const LatentBytes& bytes);

std::uint8_t quantize_value(double v);
double dequantize_value(std::uint8_t b);

/// Convolutional JSCC autoencoder. The encoder is four stride-2 convolutions
/// (3 -> 32 -> 64 -> 64 -> c_lat) ending in a squashing nonlinearity; the
/// decoder mirrors it with pixel-shuffle upsampling and a sigmoid output.
/// c_lat = ceil(192 * eta) holds one 16x16 source block's byte budget per
/// latent grid cell, so the same weights serve any H, W that are multiples
/// of 16 and any run-time eta up to the model's training eta (the flattened
/// latent is truncated to the requested byte count and zero-padded on
/// decode).
template <typename S>
class CodecModel {
public:
    struct Cache {
        typename numkit::Conv2d<S>::Cache enc_conv[4];
        typename numkit::Activation<S>::Cache enc_act[4];
        typename numkit::Conv2d<S>::Cache dec_conv[4];
        typename numkit::Activation<S>::Cache dec_act[4];
    };

    CodecModel(double model_eta, std::uint64_t init_seed);

    /// Full latent grid (c_lat x H/16 x W/16), values strictly in (-1, 1).
    numkit::Tensor<S> encode_grid(const numkit::Tensor<S>& image, Cache* cache = nullptr) const;

    /// Continuous latent with exactly rate.latent_byte_count() scalars.
    numkit::Tensor<S> encode(const numkit::Tensor<S>& image, const RateConfig& rate) const;

    /// Image 3 x H x W with values in [0, 1].
    numkit::Tensor<S> decode_grid(const numkit::Tensor<S>& latent_grid, Cache* cache = nullptr) const;
    numkit::Tensor<S> decode(const LatentBytes& latent) const;

    /// Gradient wrt the latent grid; accumulates decoder parameter gradients.
    numkit::Tensor<S> decode_backward(const numkit::Tensor<S>& grad_image, Cache& cache);
    /// Gradient wrt the image; accumulates encoder parameter gradients.
    numkit::Tensor<S> encode_backward(const numkit::Tensor<S>& grad_grid, Cache& cache);

    /// Zero-padded reshape of a truncated latent back onto the grid.
    numkit::Tensor<S> expand_latent(const std::vector<S>& values, const RateConfig& rate) const;

    std::vector<numkit::Parameter<S>*> params();
    std::vector<const numkit::Parameter<S>*> params() const;

    /// Throws if the grid cannot hold the requested byte count.
    void check_capacity(const RateConfig& rate) const;

    double model_eta() const { return model_eta_; }
    std::size_t latent_channels() const { return c_lat_; }
    std::uint64_t train_seed = 0;

private:
    double model_eta_;
    std::size_t c_lat_;
    std::vector<numkit::Conv2d<S>> enc_;
    std::vector<numkit::Activation<S>> enc_act_;
    std::vector<numkit::Conv2d<S>> dec_;
    std::vector<numkit::Activation<S>> dec_act_;
};

using CodecModelF = CodecModel<float>;

/// Checkpoint I/O (float only; the format stores 32-bit values).
void save_codec(const std::string& path, const CodecModel<float>& model);
CodecModel<float> load_codec(const std::string& path);

struct CodecTrainOptions {
    numkit::TrainConfig config;
    RateConfig rate;                  // training crop extents and eta
    std::uint64_t seed = 1;
    double bit_error_rate = -1.0;     // latent bit-flip probability; <0 = default (16QAM at 10 dB)
    bool random_eta = true;           // sample effective eta in [eta_min_frac*eta, eta] per image
    double eta_min_frac = 0.25;
    std::size_t threads = 0;          // 0 = hardware concurrency, capped at batch size
};

/// Default training corruption: theoretical 16QAM bit error rate at the
/// 10 dB training SNR.
double default_train_bit_error_rate();

/// Deterministic given options.seed. Quantization and channel corruption are
/// passed through as identity on the backward path. Throws on an empty corpus
/// or a non-finite loss (message carries the step index).
numkit::TrainResult train_codec(CodecModel<float>& model, const std::vector<numkit::Tensor<float>>& corpus,
                        const CodecTrainOptions& options);

extern template class CodecModel<float>;
extern template class CodecModel<double>;
extern template LatentBytes quantize<float>(const numkit::Tensor<float>&, const RateConfig&);
extern template LatentBytes quantize<double>(const numkit::Tensor<double>&, const RateConfig&);
extern template numkit::Tensor<float> dequantize<float>(const LatentBytes&);
extern template numkit::Tensor<double> dequantize<double>(const LatentBytes&);

}  // namespace srec::codec
