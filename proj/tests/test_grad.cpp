#include "doctest.h"

#include "srec/codec/codec.hpp"
#include "srec/numkit/grad_check.hpp"
#include "srec/numkit/layers.hpp"
#include "srec/sr/rdn.hpp"
#include "test_support.hpp"

using namespace srec::numkit;
using test_support::random_tensor;

namespace {

/// Adapter giving a bare activation the fragment interface.
struct ActFragment {
    Activation<double> act;
    using Cache = Activation<double>::Cache;
    Cache last;

    Tensor<double> forward(const Tensor<double>& x, Cache* cache) {
        Cache local;
        return act.forward(x, cache ? cache : &local);
    }
    Tensor<double> backward(const Tensor<double>& g, const Cache& cache) { return act.backward(g, cache); }
};

/// Encoder+decoder composition with quantization bypassed (the training path
/// treats it as identity).
struct CodecFragment {
    srec::codec::CodecModel<double> model{0.2, 77};
    using Cache = srec::codec::CodecModel<double>::Cache;

    Tensor<double> forward(const Tensor<double>& x, Cache* cache) {
        Cache local;
        Cache& c = cache ? *cache : local;
        return model.decode_grid(model.encode_grid(x, &c), &c);
    }
    Tensor<double> backward(const Tensor<double>& g, const Cache& cache) {
        Cache& c = const_cast<Cache&>(cache);
        return model.encode_backward(model.decode_backward(g, c), c);
    }
    std::vector<Parameter<double>*> params() { return model.params(); }
};

}  // namespace

TEST_CASE("conv2d gradients match finite differences within 1e-4") {
    for (auto [stride, padding] : {std::pair{std::size_t(1), Padding::Same},
                                   {std::size_t(2), Padding::Same},
                                   {std::size_t(1), Padding::Valid}}) {
        Conv2d<double> conv(2, 3, 3, stride, padding, true, "fd");
        Rng rng(17);
        conv.init_params(rng);
        auto x = random_tensor<double>({2, 8, 8}, 31);
        GradCheckConfig cfg;
        cfg.tolerance = 1e-4;
        auto report = grad_check(conv, x, cfg);
        INFO("worst: ", report.worst_coordinate, " err ", report.max_rel_error);
        CHECK(report.passed);
    }
}

TEST_CASE("relu gradients away from the kink match finite differences exactly") {
    ActFragment frag{Activation<double>(ActKind::Relu)};
    // All inputs bounded away from 0 by more than the step h = 1e-5.
    Tensor<double> x({8}, {-1.0, -0.5, -0.2, -0.01, 0.01, 0.2, 0.5, 1.0});
    GradCheckConfig cfg;
    cfg.tolerance = 1e-6;  // piecewise-linear region: agreement to rounding noise
    auto report = grad_check(frag, x, cfg);
    CHECK(report.passed);
}

TEST_CASE("sigmoid and squash gradients match finite differences") {
    for (ActKind kind : {ActKind::Sigmoid, ActKind::TanhSquash}) {
        ActFragment frag{Activation<double>(kind)};
        auto x = random_tensor<double>({32}, 13, -2.0, 2.0);
        GradCheckConfig cfg;
        cfg.tolerance = 1e-6;
        auto report = grad_check(frag, x, cfg);
        CHECK(report.passed);
    }
}

TEST_CASE("small codec composition passes the gradient check") {
    CodecFragment frag;
    auto x = random_tensor<double>({3, 16, 16}, 5, 0.0, 1.0);
    GradCheckConfig cfg;
    cfg.tolerance = 1e-3;
    cfg.max_param_coords = 12;
    cfg.max_input_coords = 40;
    auto report = grad_check(frag, x, cfg);
    INFO("worst: ", report.worst_coordinate, " err ", report.max_rel_error);
    CHECK(report.passed);
}

TEST_CASE("small RDN configuration passes the gradient check") {
    srec::sr::RdnConfig config;
    config.rdb_count = 1;
    config.layers_per_rdb = 2;
    config.growth = 4;
    config.base_channels = 8;
    config.scale = 2;
    srec::sr::RdnModel<double> model(config, 123);
    auto x = random_tensor<double>({3, 16, 16}, 9, 0.05, 0.95);
    GradCheckConfig cfg;
    cfg.tolerance = 1e-3;
    cfg.max_param_coords = 10;
    cfg.max_input_coords = 30;
    auto report = grad_check(model, x, cfg);
    INFO("worst: ", report.worst_coordinate, " err ", report.max_rel_error);
    CHECK(report.passed);
}
