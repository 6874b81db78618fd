#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "srec/numkit/layers.hpp"
#include "srec/numkit/optim.hpp"
#include "srec/numkit/tensor.hpp"

namespace srec::sr {

struct RdnConfig {
    std::size_t rdb_count = 3;       // D
    std::size_t layers_per_rdb = 4;  // C
    std::size_t growth = 16;         // G
    std::size_t base_channels = 32;  // G0
    std::size_t scale = 2;           // r, 1 (pure refinement) or 2
    std::array<float, 3> channel_means{0.5f, 0.5f, 0.5f};

    void validate() const;
};

/// Attention UNet: four conv+relu+avgpool blocks down, four
/// upsample+concat-skip+conv+relu blocks up, then a 1x1 head with a sigmoid.
/// Maps 3 x H x W to a per-channel per-pixel weight map G0 x H x W in (0, 1);
/// H and W must be divisible by 16.
template <typename S>
class UNet {
public:
    struct Cache {
        typename numkit::Conv2d<S>::Cache down_conv[4];
        typename numkit::Activation<S>::Cache down_act[4];
        typename numkit::Conv2d<S>::Cache up_conv[4];
        typename numkit::Activation<S>::Cache up_act[4];
        typename numkit::Conv2d<S>::Cache head_conv;
        typename numkit::Activation<S>::Cache head_act;
    };

    explicit UNet(std::size_t out_channels);

    numkit::Tensor<S> forward(const numkit::Tensor<S>& x, Cache* cache = nullptr) const;
    numkit::Tensor<S> backward(const numkit::Tensor<S>& grad_map, Cache& cache);
    std::vector<numkit::Parameter<S>*> params();
    void init_params(numkit::Rng& rng);

    numkit::Conv2d<S>& head() { return head_; }

private:
    static constexpr std::size_t kWidths[4] = {8, 16, 32, 32};
    std::vector<numkit::Conv2d<S>> down_;
    std::vector<numkit::Conv2d<S>> up_;
    numkit::Conv2d<S> head_;
    numkit::Activation<S> relu_{numkit::ActKind::Relu};
    numkit::Activation<S> sigmoid_{numkit::ActKind::Sigmoid};
};

/// Residual dense block: layers_per_rdb densely connected 3x3 conv+relu
/// layers (layer c consumes G0 + c*G channels), a 1x1 local-fusion conv back
/// to G0 channels, and a residual add of the block input.
template <typename S>
class RdbBlock {
public:
    struct Cache {
        std::vector<typename numkit::Conv2d<S>::Cache> conv;  // input of layer c = conv[c].input
        std::vector<typename numkit::Activation<S>::Cache> act;
        typename numkit::Conv2d<S>::Cache lff;
    };

    RdbBlock(std::size_t base_channels, std::size_t growth, std::size_t layers, const std::string& name);

    numkit::Tensor<S> forward(const numkit::Tensor<S>& input, Cache* cache = nullptr) const;
    numkit::Tensor<S> backward(const numkit::Tensor<S>& grad_out, Cache& cache);
    std::vector<numkit::Parameter<S>*> params();
    void init_params(numkit::Rng& rng);

    std::size_t layer_in_channels(std::size_t c) const { return g0_ + c * g_; }
    std::size_t layer_count() const { return layers_; }
    numkit::Conv2d<S>& local_fusion() { return lff_; }
    numkit::Conv2d<S>& conv(std::size_t c) { return convs_.at(c); }

private:
    std::size_t g0_, g_, layers_;
    std::vector<numkit::Conv2d<S>> convs_;
    numkit::Conv2d<S> lff_;
    numkit::Activation<S> relu_{numkit::ActKind::Relu};
};

template <typename S>
numkit::Tensor<S> sub_mean(const numkit::Tensor<S>& x, const std::array<float, 3>& means);
template <typename S>
numkit::Tensor<S> add_mean(const numkit::Tensor<S>& x, const std::array<float, 3>& means);

/// Receiver-side enhancer. Forward order: sub_mean; the UNet weight map, the
/// shallow upsampled branch f1 = shuffle(up1(x0)) and the shallow features
/// F0 = sfe2(sfe1(x0)); the RDB stack; global feature fusion over the
/// concatenated RDB outputs; elementwise modulation by the weight map;
/// upsampling; the global residual add of f1; a final 3x3 conv; add_mean.
template <typename S>
class RdnModel {
public:
    struct Cache {
        typename UNet<S>::Cache unet;
        typename numkit::Conv2d<S>::Cache up1, sfe1, sfe2, gff1, gff2, up2, final;
        std::vector<typename RdbBlock<S>::Cache> rdb;
        numkit::Tensor<S> weight_map;
        numkit::Tensor<S> fused;  // F_gf, needed for the modulation backward
    };

    RdnModel(const RdnConfig& config, std::uint64_t init_seed);

    const RdnConfig& config() const { return config_; }

    /// 3 x H x W -> 3 x rH x rW.
    numkit::Tensor<S> forward(const numkit::Tensor<S>& x, Cache* cache = nullptr) const;
    numkit::Tensor<S> backward(const numkit::Tensor<S>& grad_out, Cache& cache);
    std::vector<numkit::Parameter<S>*> params();
    std::vector<const numkit::Parameter<S>*> params() const;

    /// The UNet attention map alone (G0 x H x W, strictly in (0, 1)).
    numkit::Tensor<S> attention_map(const numkit::Tensor<S>& x) const;

    UNet<S>& unet() { return unet_; }
    RdbBlock<S>& rdb(std::size_t d) { return rdbs_.at(d); }
    numkit::Conv2d<S>& final_conv() { return final_; }
    numkit::Conv2d<S>& up1_conv() { return up1_; }
    numkit::Conv2d<S>& up2_conv() { return up2_; }

    std::uint64_t train_seed = 0;

private:
    RdnConfig config_;
    UNet<S> unet_;
    numkit::Conv2d<S> up1_, sfe1_, sfe2_, gff1_, gff2_, up2_, final_;
    std::vector<RdbBlock<S>> rdbs_;

    void validate_input(const numkit::Tensor<S>& x) const;
};

using RdnModelF = RdnModel<float>;

void save_rdn(const std::string& path, const RdnModel<float>& model);
RdnModel<float> load_rdn(const std::string& path);

/// One supervised pair: pipeline-degraded low-resolution input and the
/// ground-truth crop at the output resolution.
struct SrPair {
    numkit::Tensor<float> degraded;
    numkit::Tensor<float> target;
};

struct SrTrainOptions {
    numkit::TrainConfig config;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
};

numkit::TrainResult train_sr(RdnModel<float>& model, const std::vector<SrPair>& pairs,
                             const SrTrainOptions& options);

extern template class UNet<float>;
extern template class UNet<double>;
extern template class RdbBlock<float>;
extern template class RdbBlock<double>;
extern template class RdnModel<float>;
extern template class RdnModel<double>;

}  // namespace srec::sr
