#include "srec/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "srec/modem/modem.hpp"

namespace srec::codec {

using numkit::ActKind;
using numkit::Padding;
using numkit::Tensor;

std::size_t RateConfig::latent_byte_count() const {
    validate();
    return static_cast<std::size_t>(
        std::ceil(eta * 3.0 * static_cast<double>(height) * static_cast<double>(width) / 4.0));
}

void RateConfig::validate() const {
    if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("RateConfig: eta must lie in (0, 1]");
    if (height == 0 || width == 0 || height % 16 != 0 || width % 16 != 0)
        throw std::invalid_argument("RateConfig: extents must be nonzero multiples of 16");
}

std::uint8_t quantize_value(double v) {
    v = std::clamp(v, -1.0, 1.0);
    return static_cast<std::uint8_t>(std::lround((v + 1.0) / 2.0 * 255.0));
}

double dequantize_value(std::uint8_t b) { return 2.0 * static_cast<double>(b) / 255.0 - 1.0; }

template <typename S>
LatentBytes quantize(const Tensor<S>& latent, const RateConfig& rate) {
    if (latent.numel() != rate.latent_byte_count())
        throw std::invalid_argument("quantize: latent length does not match rate config");
    LatentBytes out;
    out.rate = rate;
    out.bytes.resize(latent.numel());
    for (std::size_t i = 0; i < latent.numel(); ++i)
        out.bytes[i] = quantize_value(static_cast<double>(latent.data[i]));
    return out;
}

template <typename S>
Tensor<S> dequantize(const LatentBytes& bytes) {
    Tensor<S> out({bytes.bytes.size()});
    for (std::size_t i = 0; i < bytes.bytes.size(); ++i)
        out.data[i] = static_cast<S>(dequantize_value(bytes.bytes[i]));
    return out;
}

template <typename S>
CodecModel<S>::CodecModel(double model_eta, std::uint64_t init_seed) : model_eta_(model_eta) {
    if (!(model_eta > 0.0) || model_eta > 1.0)
        throw std::invalid_argument("CodecModel: eta must lie in (0, 1]");
    // One latent grid cell covers a 16x16 source block: ceil(eta * 3*256/4) bytes.
    c_lat_ = static_cast<std::size_t>(std::ceil(192.0 * model_eta));

    enc_.reserve(4);
    enc_.emplace_back(3, 32, 3, 2, Padding::Same, true, "enc1");
    enc_.emplace_back(32, 64, 3, 2, Padding::Same, true, "enc2");
    enc_.emplace_back(64, 64, 3, 2, Padding::Same, true, "enc3");
    enc_.emplace_back(64, c_lat_, 3, 2, Padding::Same, true, "enc4");
    enc_act_ = {numkit::Activation<S>(ActKind::Relu), numkit::Activation<S>(ActKind::Relu),
                numkit::Activation<S>(ActKind::Relu), numkit::Activation<S>(ActKind::TanhSquash)};

    dec_.reserve(4);
    dec_.emplace_back(c_lat_, 64 * 4, 3, 1, Padding::Same, true, "dec1");
    dec_.emplace_back(64, 64 * 4, 3, 1, Padding::Same, true, "dec2");
    dec_.emplace_back(64, 32 * 4, 3, 1, Padding::Same, true, "dec3");
    dec_.emplace_back(32, 3 * 4, 3, 1, Padding::Same, true, "dec4");
    dec_act_ = {numkit::Activation<S>(ActKind::Relu), numkit::Activation<S>(ActKind::Relu),
                numkit::Activation<S>(ActKind::Relu), numkit::Activation<S>(ActKind::Sigmoid)};

    numkit::Rng rng(init_seed);
    for (auto& c : enc_) c.init_params(rng);
    for (auto& c : dec_) c.init_params(rng);
}

template <typename S>
void CodecModel<S>::check_capacity(const RateConfig& rate) const {
    rate.validate();
    const std::size_t cells = rate.grid_height() * rate.grid_width();
    if (rate.latent_byte_count() > cells * c_lat_)
        throw std::invalid_argument("CodecModel: rate config needs " +
                                    std::to_string(rate.latent_byte_count()) +
                                    " bytes but the latent grid holds " +
                                    std::to_string(cells * c_lat_));
}

template <typename S>
Tensor<S> CodecModel<S>::encode_grid(const Tensor<S>& image, Cache* cache) const {
    if (image.rank() != 3 || image.shape[0] != 3)
        throw std::invalid_argument("encode: image must be 3 x H x W");
    if (image.shape[1] % 16 != 0 || image.shape[2] % 16 != 0)
        throw std::invalid_argument("encode: extents must be multiples of 16");
    Tensor<S> h = image;
    for (std::size_t i = 0; i < 4; ++i) {
        h = enc_[i].forward(h, cache ? &cache->enc_conv[i] : nullptr);
        h = enc_act_[i].forward(h, cache ? &cache->enc_act[i] : nullptr);
    }
    return h;
}

template <typename S>
Tensor<S> CodecModel<S>::encode(const Tensor<S>& image, const RateConfig& rate) const {
    check_capacity(rate);
    if (image.shape.size() != 3 || image.shape[1] != rate.height || image.shape[2] != rate.width)
        throw std::invalid_argument("encode: image extents do not match the rate config");
    Tensor<S> grid = encode_grid(image);
    const std::size_t n = rate.latent_byte_count();
    Tensor<S> latent({n});
    std::copy(grid.data.begin(), grid.data.begin() + n, latent.data.begin());
    return latent;
}

template <typename S>
Tensor<S> CodecModel<S>::expand_latent(const std::vector<S>& values, const RateConfig& rate) const {
    check_capacity(rate);
    Tensor<S> grid({c_lat_, rate.grid_height(), rate.grid_width()});
    if (values.size() > grid.numel())
        throw std::invalid_argument("expand_latent: too many values for the grid");
    std::copy(values.begin(), values.end(), grid.data.begin());
    return grid;
}

template <typename S>
Tensor<S> CodecModel<S>::decode_grid(const Tensor<S>& latent_grid, Cache* cache) const {
    if (latent_grid.rank() != 3 || latent_grid.shape[0] != c_lat_)
        throw std::invalid_argument("decode: latent grid must be c_lat x h x w");
    Tensor<S> h = latent_grid;
    for (std::size_t i = 0; i < 4; ++i) {
        h = dec_[i].forward(h, cache ? &cache->dec_conv[i] : nullptr);
        h = numkit::pixel_shuffle(h, 2);
        h = dec_act_[i].forward(h, cache ? &cache->dec_act[i] : nullptr);
    }
    return h;
}

template <typename S>
Tensor<S> CodecModel<S>::decode(const LatentBytes& latent) const {
    if (latent.bytes.size() != latent.rate.latent_byte_count())
        throw std::invalid_argument("decode: byte count does not match the rate config");
    std::vector<S> values(latent.bytes.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<S>(dequantize_value(latent.bytes[i]));
    Tensor<S> grid = expand_latent(values, latent.rate);
    Tensor<S> image = decode_grid(grid);
    for (auto& v : image.data) v = std::clamp(v, S(0), S(1));
    return image;
}

template <typename S>
Tensor<S> CodecModel<S>::decode_backward(const Tensor<S>& grad_image, Cache& cache) {
    Tensor<S> g = grad_image;
    for (int i = 3; i >= 0; --i) {
        g = dec_act_[i].backward(g, cache.dec_act[i]);
        g = numkit::pixel_unshuffle(g, 2);
        g = dec_[i].backward(g, cache.dec_conv[i]);
    }
    return g;
}

template <typename S>
Tensor<S> CodecModel<S>::encode_backward(const Tensor<S>& grad_grid, Cache& cache) {
    Tensor<S> g = grad_grid;
    for (int i = 3; i >= 0; --i) {
        g = enc_act_[i].backward(g, cache.enc_act[i]);
        g = enc_[i].backward(g, cache.enc_conv[i]);
    }
    return g;
}

template <typename S>
std::vector<numkit::Parameter<S>*> CodecModel<S>::params() {
    std::vector<numkit::Parameter<S>*> out;
    for (auto& c : enc_)
        for (auto* p : c.params()) out.push_back(p);
    for (auto& c : dec_)
        for (auto* p : c.params()) out.push_back(p);
    return out;
}

template <typename S>
std::vector<const numkit::Parameter<S>*> CodecModel<S>::params() const {
    std::vector<const numkit::Parameter<S>*> out;
    for (const auto* p : const_cast<CodecModel<S>*>(this)->params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {
constexpr const char* kMetaName = "__meta.codec";
constexpr const char* kSeedName = "__meta.train_seed";

std::vector<float> seed_to_floats(std::uint64_t seed) {
    std::vector<float> out(8);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<float>((seed >> (8 * i)) & 0xff);
    return out;
}

std::uint64_t seed_from_floats(const std::vector<float>& v) {
    std::uint64_t seed = 0;
    for (int i = 0; i < 8 && i < static_cast<int>(v.size()); ++i)
        seed |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(v[i])) << (8 * i);
    return seed;
}
}  // namespace

void save_codec(const std::string& path, const CodecModel<float>& model) {
    std::vector<numkit::CheckpointEntry> entries;
    entries.push_back({kMetaName, Tensor<float>({1}, {static_cast<float>(model.model_eta())})});
    entries.push_back({kSeedName, Tensor<float>({8}, seed_to_floats(model.train_seed))});
    for (const auto* p : model.params()) entries.push_back({p->name, p->value});
    numkit::save_checkpoint(path, entries);
}

CodecModel<float> load_codec(const std::string& path) {
    auto entries = numkit::load_checkpoint(path);
    const auto& meta = numkit::find_entry(entries, kMetaName);
    CodecModel<float> model(static_cast<double>(meta.tensor.data.at(0)), 0);
    model.train_seed = seed_from_floats(numkit::find_entry(entries, kSeedName).tensor.data);
    for (auto* p : model.params()) {
        const auto& e = numkit::find_entry(entries, p->name);
        if (e.tensor.shape != p->value.shape)
            throw std::runtime_error("codec checkpoint: shape mismatch for '" + p->name + "'");
        p->value = e.tensor;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Training

double default_train_bit_error_rate() {
    return modem::theoretical_ber(modem::Scheme::Qam16, 10.0);
}

namespace {

/// Flatten-truncate, quantize, flip bits, dequantize, zero-pad: the channel
/// as seen by the decoder during training. Gradients treat it as identity on
/// the first n_eff slots (straight-through).
Tensor<float> corrupt_latent(const CodecModel<float>& model, const Tensor<float>& grid,
                             std::size_t n_eff, double bit_error_rate, numkit::Rng& rng) {
    Tensor<float> out = grid;
    std::fill(out.data.begin(), out.data.end(), 0.0f);
    for (std::size_t i = 0; i < n_eff; ++i) {
        std::uint8_t b = quantize_value(static_cast<double>(grid.data[i]));
        if (bit_error_rate > 0) {
            for (int bit = 0; bit < 8; ++bit)
                if (rng.uniform() < bit_error_rate) b = static_cast<std::uint8_t>(b ^ (1u << bit));
        }
        out.data[i] = static_cast<float>(dequantize_value(b));
    }
    (void)model;
    return out;
}

struct ItemGrads {
    double loss = 0;
    std::vector<Tensor<float>> param_grads;
};

}  // namespace

numkit::TrainResult train_codec(CodecModel<float>& model, const std::vector<Tensor<float>>& corpus,
                        const CodecTrainOptions& options) {
    if (corpus.empty()) throw std::invalid_argument("train_codec: empty corpus");
    options.config.validate();
    model.check_capacity(options.rate);
    for (const auto& img : corpus)
        if (img.shape != std::vector<std::size_t>{3, options.rate.height, options.rate.width})
            throw std::invalid_argument("train_codec: corpus crop does not match the rate config");

    const double ber = options.bit_error_rate < 0 ? default_train_bit_error_rate()
                                                  : options.bit_error_rate;
    model.train_seed = options.seed;

    // Held-out split: every fifth image when the corpus is large enough.
    std::vector<std::size_t> train_idx, hold_idx;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus.size() >= 5 && i % 5 == 4) hold_idx.push_back(i);
        else train_idx.push_back(i);
    }
    if (hold_idx.empty()) hold_idx = train_idx;

    auto holdout_mse = [&]() {
        double acc = 0;
        for (std::size_t i : hold_idx) {
            Tensor<float> grid = model.encode_grid(corpus[i]);
            const std::size_t n = options.rate.latent_byte_count();
            Tensor<float> clean = grid;
            std::fill(clean.data.begin() + n, clean.data.end(), 0.0f);
            for (std::size_t j = 0; j < n; ++j)
                clean.data[j] = static_cast<float>(dequantize_value(
                    quantize_value(static_cast<double>(grid.data[j]))));
            acc += static_cast<double>(numkit::mse_loss(model.decode_grid(clean), corpus[i]));
        }
        return acc / static_cast<double>(hold_idx.size());
    };

    numkit::TrainResult result;
    result.initial_holdout_mse = holdout_mse();

    auto master_params = model.params();
    numkit::Rng shuffle_rng(numkit::hash_mix(options.seed, 0x73687566ULL));

    const std::size_t threads =
        std::max<std::size_t>(1, std::min({options.threads == 0
                                               ? static_cast<std::size_t>(std::thread::hardware_concurrency())
                                               : options.threads,
                                           options.config.batch_size, std::size_t(8)}));

    std::size_t step = 0;
    const std::size_t min_eff =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(
                                     options.eta_min_frac * options.rate.latent_byte_count())));

    for (std::size_t epoch = 0; epoch < options.config.epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += options.config.batch_size) {
            const std::size_t count = std::min(options.config.batch_size, order.size() - start);
            ++step;

            // Per-item seeds derived from (seed, step, slot): thread-count invariant.
            std::vector<ItemGrads> slots(count);
            auto run_item = [&](std::size_t slot, CodecModel<float>& worker) {
                const std::size_t img_idx = order[start + slot];
                numkit::Rng rng(numkit::hash_mix(numkit::hash_mix(options.seed, step), slot));

                std::size_t n_eff = options.rate.latent_byte_count();
                if (options.random_eta && n_eff > min_eff)
                    n_eff = min_eff + rng.below(n_eff - min_eff + 1);

                typename CodecModel<float>::Cache cache;
                Tensor<float> grid = worker.encode_grid(corpus[img_idx], &cache);
                Tensor<float> received = corrupt_latent(worker, grid, n_eff, ber, rng);
                Tensor<float> out = worker.decode_grid(received, &cache);

                slots[slot].loss = static_cast<double>(numkit::mse_loss(out, corpus[img_idx]));
                Tensor<float> g = numkit::mse_loss_grad(out, corpus[img_idx]);
                g = numkit::scale(g, 1.0f / static_cast<float>(count));
                Tensor<float> g_grid = worker.decode_backward(g, cache);
                // straight-through: pass gradient only through transmitted slots
                std::fill(g_grid.data.begin() + n_eff, g_grid.data.end(), 0.0f);
                worker.encode_backward(g_grid, cache);

                auto wp = worker.params();
                slots[slot].param_grads.reserve(wp.size());
                for (auto* p : wp) {
                    slots[slot].param_grads.push_back(p->grad);
                    p->zero_grad();
                }
            };

            if (threads == 1 || count == 1) {
                for (std::size_t slot = 0; slot < count; ++slot) run_item(slot, model);
            } else {
                std::vector<CodecModel<float>> workers(threads, model);
                std::vector<std::thread> pool;
                for (std::size_t t = 0; t < threads; ++t)
                    pool.emplace_back([&, t] {
                        for (std::size_t slot = t; slot < count; slot += threads)
                            run_item(slot, workers[t]);
                    });
                for (auto& th : pool) th.join();
            }

            double batch_loss = 0;
            for (std::size_t slot = 0; slot < count; ++slot) {
                batch_loss += slots[slot].loss;
                for (std::size_t pi = 0; pi < master_params.size(); ++pi) {
                    numkit::add_inplace(master_params[pi]->grad, slots[slot].param_grads[pi]);
                    master_params[pi]->grad_populated = true;
                }
            }
            batch_loss /= static_cast<double>(count);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_codec: non-finite loss at step " + std::to_string(step));
            result.loss_history.push_back(batch_loss);

            numkit::adam_step(master_params, options.config);
        }
    }

    result.steps = step;
    result.final_holdout_mse = holdout_mse();
    return result;
}

template class CodecModel<float>;
template class CodecModel<double>;
template LatentBytes quantize<float>(const Tensor<float>&, const RateConfig&);
template LatentBytes quantize<double>(const Tensor<double>&, const RateConfig&);
template Tensor<float> dequantize<float>(const LatentBytes&);
template Tensor<double> dequantize<double>(const LatentBytes&);

}  // namespace srec::codec
