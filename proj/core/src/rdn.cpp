#include "srec/sr/rdn.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "srec/numkit/checkpoint.hpp"

namespace srec::sr {

using numkit::ActKind;
using numkit::Padding;
using numkit::Tensor;

void RdnConfig::validate() const {
    if (rdb_count < 1 || layers_per_rdb < 1 || growth < 1 || base_channels < 1)
        throw std::invalid_argument("RdnConfig: D, C, G, G0 must all be >= 1");
    if (scale != 1 && scale != 2) throw std::invalid_argument("RdnConfig: scale must be 1 or 2");
}

namespace {

template <typename S>
void add_into_channels(Tensor<S>& dst, const Tensor<S>& src, std::size_t c0) {
    const std::size_t plane = dst.shape[1] * dst.shape[2];
    for (std::size_t i = 0; i < src.data.size(); ++i) dst.data[c0 * plane + i] += src.data[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// UNet

namespace {
// Output widths of the up path per level (level 0 = full resolution).
constexpr std::size_t kUpOut[4] = {8, 8, 16, 32};
}  // namespace

template <typename S>
UNet<S>::UNet(std::size_t out_channels)
    : head_(kUpOut[0], out_channels, 1, 1, Padding::Same, true, "unet.head") {
    std::size_t in = 3;
    for (std::size_t i = 0; i < 4; ++i) {
        down_.emplace_back(in, kWidths[i], 3, 1, Padding::Same, true, "unet.down" + std::to_string(i + 1));
        in = kWidths[i];
    }
    // Up blocks are applied deepest-first: up_[i] pairs with the skip at level i.
    for (std::size_t i = 0; i < 4; ++i) {
        const std::size_t carried = i == 3 ? kWidths[3] : kUpOut[i + 1];
        up_.emplace_back(carried + kWidths[i], kUpOut[i], 3, 1, Padding::Same, true,
                         "unet.up" + std::to_string(i + 1));
    }
}

template <typename S>
void UNet<S>::init_params(numkit::Rng& rng) {
    for (auto& c : down_) c.init_params(rng);
    for (auto& c : up_) c.init_params(rng);
    head_.init_params(rng);
}

template <typename S>
Tensor<S> UNet<S>::forward(const Tensor<S>& x, Cache* cache) const {
    if (x.rank() != 3 || x.shape[0] != 3) throw std::invalid_argument("UNet: input must be 3 x H x W");
    if (x.shape[1] % 16 != 0 || x.shape[2] % 16 != 0)
        throw std::invalid_argument("UNet: extents must be divisible by 16 (four halvings)");

    Cache local;
    Cache& c = cache ? *cache : local;

    std::array<Tensor<S>, 4> skips;
    Tensor<S> h = x;
    for (std::size_t i = 0; i < 4; ++i) {
        h = down_[i].forward(h, &c.down_conv[i]);
        h = relu_.forward(h, &c.down_act[i]);
        skips[i] = h;
        h = numkit::resample(h, numkit::ResampleDir::Down);
    }
    for (std::size_t i = 4; i-- > 0;) {
        Tensor<S> up = numkit::resample(h, numkit::ResampleDir::Up);
        h = numkit::concat_channels(up, skips[i]);
        h = up_[i].forward(h, &c.up_conv[i]);
        h = relu_.forward(h, &c.up_act[i]);
    }
    h = head_.forward(h, &c.head_conv);
    return sigmoid_.forward(h, &c.head_act);
}

template <typename S>
Tensor<S> UNet<S>::backward(const Tensor<S>& grad_map, Cache& cache) {
    Tensor<S> g = sigmoid_.backward(grad_map, cache.head_act);
    g = head_.backward(g, cache.head_conv);

    std::array<Tensor<S>, 4> skip_grads;
    for (std::size_t i = 0; i < 4; ++i) {
        g = relu_.backward(g, cache.up_act[i]);
        Tensor<S> dcat = up_[i].backward(g, cache.up_conv[i]);
        const std::size_t carried = dcat.shape[0] - kWidths[i];
        Tensor<S> dup = numkit::slice_channels(dcat, 0, carried);
        skip_grads[i] = numkit::slice_channels(dcat, carried, kWidths[i]);
        g = numkit::upsample2_backward(dup);
    }
    // g is now the gradient at the bottom pooled feature.
    for (std::size_t i = 4; i-- > 0;) {
        Tensor<S> dh = numkit::avg_pool2_backward(g);
        numkit::add_inplace(dh, skip_grads[i]);
        dh = relu_.backward(dh, cache.down_act[i]);
        g = down_[i].backward(dh, cache.down_conv[i]);
    }
    return g;
}

template <typename S>
std::vector<numkit::Parameter<S>*> UNet<S>::params() {
    std::vector<numkit::Parameter<S>*> out;
    for (auto& c : down_)
        for (auto* p : c.params()) out.push_back(p);
    for (auto& c : up_)
        for (auto* p : c.params()) out.push_back(p);
    for (auto* p : head_.params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------
// Residual dense block

template <typename S>
RdbBlock<S>::RdbBlock(std::size_t base_channels, std::size_t growth, std::size_t layers,
                      const std::string& name)
    : g0_(base_channels), g_(growth), layers_(layers),
      lff_(base_channels + layers * growth, base_channels, 1, 1, Padding::Same, true, name + ".lff") {
    for (std::size_t c = 0; c < layers; ++c)
        convs_.emplace_back(g0_ + c * g_, g_, 3, 1, Padding::Same, true,
                            name + ".conv" + std::to_string(c + 1));
}

template <typename S>
void RdbBlock<S>::init_params(numkit::Rng& rng) {
    for (auto& c : convs_) c.init_params(rng);
    lff_.init_params(rng);
}

template <typename S>
Tensor<S> RdbBlock<S>::forward(const Tensor<S>& input, Cache* cache) const {
    if (input.shape[0] != g0_)
        throw std::invalid_argument("RdbBlock: input must have G0 channels");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.conv.resize(layers_);
    c.act.resize(layers_);

    Tensor<S> cat = input;
    for (std::size_t l = 0; l < layers_; ++l) {
        Tensor<S> out = convs_[l].forward(cat, &c.conv[l]);
        out = relu_.forward(out, &c.act[l]);
        cat = numkit::concat_channels(cat, out);
    }
    Tensor<S> local_feature = lff_.forward(cat, &c.lff);
    return numkit::add(input, local_feature);
}

template <typename S>
Tensor<S> RdbBlock<S>::backward(const Tensor<S>& grad_out, Cache& cache) {
    // Gradient of the concatenation, chunked as [input (G0), out_1..out_C (G each)].
    Tensor<S> dcat = lff_.backward(grad_out, cache.lff);
    Tensor<S> dinput = numkit::slice_channels(dcat, 0, g0_);
    numkit::add_inplace(dinput, grad_out);  // residual path
    std::vector<Tensor<S>> douts(layers_);
    for (std::size_t l = 0; l < layers_; ++l) douts[l] = numkit::slice_channels(dcat, g0_ + l * g_, g_);

    for (std::size_t l = layers_; l-- > 0;) {
        Tensor<S> g = relu_.backward(douts[l], cache.act[l]);
        Tensor<S> dlayer_in = convs_[l].backward(g, cache.conv[l]);
        Tensor<S> d0 = numkit::slice_channels(dlayer_in, 0, g0_);
        numkit::add_inplace(dinput, d0);
        for (std::size_t j = 0; j < l; ++j) {
            Tensor<S> dj = numkit::slice_channels(dlayer_in, g0_ + j * g_, g_);
            numkit::add_inplace(douts[j], dj);
        }
    }
    return dinput;
}

template <typename S>
std::vector<numkit::Parameter<S>*> RdbBlock<S>::params() {
    std::vector<numkit::Parameter<S>*> out;
    for (auto& c : convs_)
        for (auto* p : c.params()) out.push_back(p);
    for (auto* p : lff_.params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------
// Mean shift

template <typename S>
Tensor<S> sub_mean(const Tensor<S>& x, const std::array<float, 3>& means) {
    if (x.rank() != 3 || x.shape[0] != 3) throw std::invalid_argument("sub_mean: input must be 3 x H x W");
    Tensor<S> out = x;
    const std::size_t plane = x.shape[1] * x.shape[2];
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) out.data[c * plane + i] -= static_cast<S>(means[c]);
    return out;
}

template <typename S>
Tensor<S> add_mean(const Tensor<S>& x, const std::array<float, 3>& means) {
    if (x.rank() != 3 || x.shape[0] != 3) throw std::invalid_argument("add_mean: input must be 3 x H x W");
    Tensor<S> out = x;
    const std::size_t plane = x.shape[1] * x.shape[2];
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) out.data[c * plane + i] += static_cast<S>(means[c]);
    return out;
}

// ---------------------------------------------------------------------------
// RDN model

template <typename S>
RdnModel<S>::RdnModel(const RdnConfig& config, std::uint64_t init_seed)
    : config_(config),
      unet_(config.base_channels),
      up1_(3, 3 * config.scale * config.scale, 3, 1, Padding::Same, true, "up1"),
      sfe1_(3, config.base_channels, 3, 1, Padding::Same, true, "sfe1"),
      sfe2_(config.base_channels, config.base_channels, 3, 1, Padding::Same, true, "sfe2"),
      gff1_(config.rdb_count * config.base_channels, config.base_channels, 1, 1, Padding::Same, true,
            "gff1"),
      gff2_(config.base_channels, config.base_channels, 3, 1, Padding::Same, true, "gff2"),
      up2_(config.base_channels, 3 * config.scale * config.scale, 3, 1, Padding::Same, true, "up2"),
      final_(3, 3, 3, 1, Padding::Same, true, "final") {
    config.validate();
    for (std::size_t d = 0; d < config.rdb_count; ++d)
        rdbs_.emplace_back(config.base_channels, config.growth, config.layers_per_rdb,
                           "rdb" + std::to_string(d + 1));

    // Channel bookkeeping promised by the architecture.
    if (gff1_.in_channels() != config.rdb_count * config.base_channels)
        throw std::logic_error("RdnModel: GFF input channels != D * G0");
    for (std::size_t c = 0; c < config.layers_per_rdb; ++c)
        if (rdbs_[0].layer_in_channels(c) != config.base_channels + c * config.growth)
            throw std::logic_error("RdnModel: RDB layer input channels != G0 + (c-1) * G");

    numkit::Rng rng(init_seed);
    unet_.init_params(rng);
    up1_.init_params(rng);
    sfe1_.init_params(rng);
    sfe2_.init_params(rng);
    for (auto& b : rdbs_) b.init_params(rng);
    gff1_.init_params(rng);
    gff2_.init_params(rng);
    up2_.init_params(rng);
    final_.init_params(rng);
}

template <typename S>
void RdnModel<S>::validate_input(const Tensor<S>& x) const {
    if (x.rank() != 3 || x.shape[0] != 3)
        throw std::invalid_argument("RdnModel: input must be 3 x H x W");
    if (x.shape[1] % 16 != 0 || x.shape[2] % 16 != 0)
        throw std::invalid_argument("RdnModel: extents must be divisible by 16");
}

template <typename S>
Tensor<S> RdnModel<S>::attention_map(const Tensor<S>& x) const {
    validate_input(x);
    return unet_.forward(sub_mean(x, config_.channel_means));
}

template <typename S>
Tensor<S> RdnModel<S>::forward(const Tensor<S>& x, Cache* cache) const {
    validate_input(x);
    Cache local;
    Cache& c = cache ? *cache : local;
    c.rdb.resize(config_.rdb_count);
    const std::size_t r = config_.scale;

    Tensor<S> x0 = sub_mean(x, config_.channel_means);
    Tensor<S> weight = unet_.forward(x0, &c.unet);
    Tensor<S> f1 = numkit::pixel_shuffle(up1_.forward(x0, &c.up1), r);
    Tensor<S> features = sfe2_.forward(sfe1_.forward(x0, &c.sfe1), &c.sfe2);

    std::vector<Tensor<S>> rdb_outs;
    rdb_outs.reserve(config_.rdb_count);
    for (std::size_t d = 0; d < config_.rdb_count; ++d) {
        features = rdbs_[d].forward(features, &c.rdb[d]);
        rdb_outs.push_back(features);
    }

    Tensor<S> cat = rdb_outs[0];
    for (std::size_t d = 1; d < rdb_outs.size(); ++d) cat = numkit::concat_channels(cat, rdb_outs[d]);
    Tensor<S> fused = gff2_.forward(gff1_.forward(cat, &c.gff1), &c.gff2);

    Tensor<S> modulated = numkit::mul(fused, weight);
    Tensor<S> upsampled = numkit::pixel_shuffle(up2_.forward(modulated, &c.up2), r);
    Tensor<S> residual = numkit::add(upsampled, f1);
    Tensor<S> refined = final_.forward(residual, &c.final);

    c.weight_map = std::move(weight);
    c.fused = std::move(fused);
    return add_mean(refined, config_.channel_means);
}

template <typename S>
Tensor<S> RdnModel<S>::backward(const Tensor<S>& grad_out, Cache& cache) {
    const std::size_t r = config_.scale;

    // add_mean is a shift: gradient passes through unchanged.
    Tensor<S> d_residual = final_.backward(grad_out, cache.final);
    const Tensor<S>& d_f1 = d_residual;
    Tensor<S> d_modulated = up2_.backward(numkit::pixel_unshuffle(d_residual, r), cache.up2);

    Tensor<S> d_fused = numkit::mul(d_modulated, cache.weight_map);
    Tensor<S> d_weight = numkit::mul(d_modulated, cache.fused);

    Tensor<S> d_cat = gff1_.backward(gff2_.backward(d_fused, cache.gff2), cache.gff1);

    const std::size_t g0 = config_.base_channels;
    Tensor<S> d_features = numkit::slice_channels(d_cat, (config_.rdb_count - 1) * g0, g0);
    for (std::size_t d = config_.rdb_count; d-- > 0;) {
        d_features = rdbs_[d].backward(d_features, cache.rdb[d]);
        if (d > 0)
            numkit::add_inplace(d_features, numkit::slice_channels(d_cat, (d - 1) * g0, g0));
    }

    Tensor<S> dx0 = sfe1_.backward(sfe2_.backward(d_features, cache.sfe2), cache.sfe1);
    numkit::add_inplace(dx0, up1_.backward(numkit::pixel_unshuffle(d_f1, r), cache.up1));
    numkit::add_inplace(dx0, unet_.backward(d_weight, cache.unet));
    return dx0;  // sub_mean is a shift as well
}

template <typename S>
std::vector<numkit::Parameter<S>*> RdnModel<S>::params() {
    std::vector<numkit::Parameter<S>*> out;
    for (auto* p : unet_.params()) out.push_back(p);
    for (auto* p : up1_.params()) out.push_back(p);
    for (auto* p : sfe1_.params()) out.push_back(p);
    for (auto* p : sfe2_.params()) out.push_back(p);
    for (auto& b : rdbs_)
        for (auto* p : b.params()) out.push_back(p);
    for (auto* p : gff1_.params()) out.push_back(p);
    for (auto* p : gff2_.params()) out.push_back(p);
    for (auto* p : up2_.params()) out.push_back(p);
    for (auto* p : final_.params()) out.push_back(p);
    return out;
}

template <typename S>
std::vector<const numkit::Parameter<S>*> RdnModel<S>::params() const {
    std::vector<const numkit::Parameter<S>*> out;
    for (const auto* p : const_cast<RdnModel<S>*>(this)->params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {
constexpr const char* kMetaName = "__meta.rdn";
constexpr const char* kMeansName = "__meta.channel_means";
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

void save_rdn(const std::string& path, const RdnModel<float>& model) {
    const RdnConfig& c = model.config();
    std::vector<numkit::CheckpointEntry> entries;
    entries.push_back({kMetaName, Tensor<float>({5}, {static_cast<float>(c.rdb_count),
                                                      static_cast<float>(c.layers_per_rdb),
                                                      static_cast<float>(c.growth),
                                                      static_cast<float>(c.base_channels),
                                                      static_cast<float>(c.scale)})});
    entries.push_back({kMeansName, Tensor<float>({3}, {c.channel_means[0], c.channel_means[1],
                                                       c.channel_means[2]})});
    entries.push_back({kSeedName, Tensor<float>({8}, seed_to_floats(model.train_seed))});
    for (const auto* p : model.params()) entries.push_back({p->name, p->value});
    numkit::save_checkpoint(path, entries);
}

RdnModel<float> load_rdn(const std::string& path) {
    auto entries = numkit::load_checkpoint(path);
    const auto& meta = numkit::find_entry(entries, kMetaName).tensor.data;
    if (meta.size() != 5) throw std::runtime_error("rdn checkpoint: bad meta record");
    RdnConfig config;
    config.rdb_count = static_cast<std::size_t>(meta[0]);
    config.layers_per_rdb = static_cast<std::size_t>(meta[1]);
    config.growth = static_cast<std::size_t>(meta[2]);
    config.base_channels = static_cast<std::size_t>(meta[3]);
    config.scale = static_cast<std::size_t>(meta[4]);
    const auto& means = numkit::find_entry(entries, kMeansName).tensor.data;
    config.channel_means = {means.at(0), means.at(1), means.at(2)};

    RdnModel<float> model(config, 0);
    model.train_seed = seed_from_floats(numkit::find_entry(entries, kSeedName).tensor.data);
    for (auto* p : model.params()) {
        const auto& e = numkit::find_entry(entries, p->name);
        if (e.tensor.shape != p->value.shape)
            throw std::runtime_error("rdn checkpoint: shape mismatch for '" + p->name + "'");
        p->value = e.tensor;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Training

numkit::TrainResult train_sr(RdnModel<float>& model, const std::vector<SrPair>& pairs,
                             const SrTrainOptions& options) {
    if (pairs.empty()) throw std::invalid_argument("train_sr: empty pair corpus");
    options.config.validate();
    const std::size_t r = model.config().scale;
    for (const auto& p : pairs) {
        if (p.target.shape != std::vector<std::size_t>{3, p.degraded.shape[1] * r,
                                                       p.degraded.shape[2] * r})
            throw std::invalid_argument("train_sr: target extents must be scale * input extents");
    }
    model.train_seed = options.seed;

    std::vector<std::size_t> train_idx, hold_idx;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs.size() >= 5 && i % 5 == 4) hold_idx.push_back(i);
        else train_idx.push_back(i);
    }
    if (hold_idx.empty()) hold_idx = train_idx;

    auto holdout_mse = [&]() {
        double acc = 0;
        for (std::size_t i : hold_idx)
            acc += static_cast<double>(numkit::mse_loss(model.forward(pairs[i].degraded),
                                                        pairs[i].target));
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
    for (std::size_t epoch = 0; epoch < options.config.epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += options.config.batch_size) {
            const std::size_t count = std::min(options.config.batch_size, order.size() - start);
            ++step;

            std::vector<double> losses(count, 0.0);
            std::vector<std::vector<Tensor<float>>> grads(count);
            auto run_item = [&](std::size_t slot, RdnModel<float>& worker) {
                const auto& pair = pairs[order[start + slot]];
                typename RdnModel<float>::Cache cache;
                Tensor<float> out = worker.forward(pair.degraded, &cache);
                losses[slot] = static_cast<double>(numkit::mse_loss(out, pair.target));
                Tensor<float> g = numkit::mse_loss_grad(out, pair.target);
                g = numkit::scale(g, 1.0f / static_cast<float>(count));
                worker.backward(g, cache);
                auto wp = worker.params();
                grads[slot].reserve(wp.size());
                for (auto* p : wp) {
                    grads[slot].push_back(p->grad);
                    p->zero_grad();
                }
            };

            if (threads == 1 || count == 1) {
                for (std::size_t slot = 0; slot < count; ++slot) run_item(slot, model);
            } else {
                std::vector<RdnModel<float>> workers(threads, model);
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
                batch_loss += losses[slot];
                for (std::size_t pi = 0; pi < master_params.size(); ++pi) {
                    numkit::add_inplace(master_params[pi]->grad, grads[slot][pi]);
                    master_params[pi]->grad_populated = true;
                }
            }
            batch_loss /= static_cast<double>(count);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_sr: non-finite loss at step " + std::to_string(step));
            result.loss_history.push_back(batch_loss);
            numkit::adam_step(master_params, options.config);
        }
    }

    result.steps = step;
    result.final_holdout_mse = holdout_mse();
    return result;
}

template Tensor<float> sub_mean<float>(const Tensor<float>&, const std::array<float, 3>&);
template Tensor<double> sub_mean<double>(const Tensor<double>&, const std::array<float, 3>&);
template Tensor<float> add_mean<float>(const Tensor<float>&, const std::array<float, 3>&);
template Tensor<double> add_mean<double>(const Tensor<double>&, const std::array<float, 3>&);
template class UNet<float>;
template class UNet<double>;
template class RdbBlock<float>;
template class RdbBlock<double>;
template class RdnModel<float>;
template class RdnModel<double>;

}  // namespace srec::sr
