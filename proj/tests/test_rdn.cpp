#include "doctest.h"

#include <cmath>

#include "srec/sr/rdn.hpp"
#include "test_support.hpp"

using namespace srec::sr;
using srec::numkit::Tensor;
using test_support::random_tensor;

namespace {

RdnConfig tiny_config() {
    RdnConfig c;
    c.rdb_count = 2;
    c.layers_per_rdb = 3;
    c.growth = 4;
    c.base_channels = 8;
    c.scale = 2;
    return c;
}

/// Independent straight-line naive convolution (same padding, stride 1).
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
    const std::size_t co = w.shape[0], ci = w.shape[1], k = w.shape[2];
    const std::ptrdiff_t p = static_cast<std::ptrdiff_t>((k - 1) / 2);
    Tensor<double> out({co, x.shape[1], x.shape[2]});
    for (std::size_t o = 0; o < co; ++o)
        for (std::size_t y = 0; y < x.shape[1]; ++y)
            for (std::size_t xx = 0; xx < x.shape[2]; ++xx) {
                double acc = b.data[o];
                for (std::size_t c = 0; c < ci; ++c)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - p;
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xx + kx) - p;
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.shape[1]) || ix < 0 ||
                                ix >= static_cast<std::ptrdiff_t>(x.shape[2]))
                                continue;
                            acc += x(c, iy, ix) * w.at4(o, c, ky, kx);
                        }
                out(o, y, xx) = acc;
            }
    return out;
}

Tensor<double> naive_concat(const std::vector<Tensor<double>>& parts) {
    Tensor<double> out = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) out = srec::numkit::concat_channels(out, parts[i]);
    return out;
}

}  // namespace

TEST_CASE("rdn config validation and channel bookkeeping") {
    RdnConfig bad = tiny_config();
    bad.scale = 3;
    CHECK_THROWS_AS(RdnModel<float>(bad, 1), std::invalid_argument);
    bad = tiny_config();
    bad.rdb_count = 0;
    CHECK_THROWS_AS(RdnModel<float>(bad, 1), std::invalid_argument);

    RdbBlock<float> block(32, 16, 4, "b");
    for (std::size_t c = 0; c < 4; ++c) CHECK(block.layer_in_channels(c) == 32 + c * 16);
    CHECK(block.local_fusion().in_channels() == 32 + 4 * 16);
}

TEST_CASE("attention map shape, range, and determinism") {
    RdnConfig config = tiny_config();
    RdnModel<float> model(config, 42);
    auto x = random_tensor<float>({3, 32, 32}, 7, 0.0, 1.0);
    auto map = model.attention_map(x);
    CHECK(map.shape == std::vector<std::size_t>{config.base_channels, 32, 32});
    for (float v : map.data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    CHECK(model.attention_map(x).data == map.data);

    CHECK_THROWS_AS(model.attention_map(random_tensor<float>({3, 24, 24}, 1)),
                    std::invalid_argument);
}

TEST_CASE("zeroed local fusion makes an RDB the identity") {
    RdbBlock<float> block(8, 4, 3, "idb");
    srec::numkit::Rng rng(5);
    block.init_params(rng);
    auto& lff = block.local_fusion();
    std::fill(lff.weight.value.data.begin(), lff.weight.value.data.end(), 0.0f);
    std::fill(lff.bias.value.data.begin(), lff.bias.value.data.end(), 0.0f);

    auto x = random_tensor<float>({8, 6, 6}, 11);
    auto y = block.forward(x);
    CHECK(y.data == x.data);  // exact
}

TEST_CASE("RDB matches a straight-line unfused oracle at 64-bit") {
    RdbBlock<double> block(8, 4, 3, "orb");
    srec::numkit::Rng rng(23);
    block.init_params(rng);
    for (std::size_t c = 0; c < 3; ++c)
        for (auto& b : block.conv(c).bias.value.data) b = rng.uniform(-0.1, 0.1);

    auto input = random_tensor<double>({8, 8, 8}, 31);
    auto got = block.forward(input);

    std::vector<Tensor<double>> feats{input};
    for (std::size_t c = 0; c < 3; ++c) {
        auto cat = naive_concat(feats);
        auto out = naive_conv(cat, block.conv(c).weight.value, block.conv(c).bias.value);
        for (auto& v : out.data) v = v > 0 ? v : 0;  // ReLU
        feats.push_back(out);
    }
    auto lf = naive_conv(naive_concat(feats), block.local_fusion().weight.value,
                         block.local_fusion().bias.value);
    for (std::size_t i = 0; i < got.data.size(); ++i)
        CHECK(std::abs(got.data[i] - (input.data[i] + lf.data[i])) < 1e-12);
}

TEST_CASE("dense connectivity: layer 1 feeds every later layer") {
    RdbBlock<float> block(8, 4, 4, "dcb");
    srec::numkit::Rng rng(3);
    block.init_params(rng);
    auto x = random_tensor<float>({8, 6, 6}, 2);

    RdbBlock<float>::Cache before, after;
    block.forward(x, &before);
    block.conv(0).bias.value.data[0] += 0.25f;  // perturb layer 1's output
    block.forward(x, &after);

    for (std::size_t c = 1; c < 4; ++c)
        CHECK(before.conv[c].input.data != after.conv[c].input.data);
    CHECK(before.lff.input.data != after.lff.input.data);
}

TEST_CASE("rdn forward shape contract") {
    RdnConfig config = tiny_config();
    RdnModel<float> model(config, 9);
    auto x = random_tensor<float>({3, 32, 32}, 4, 0.0, 1.0);
    auto y = model.forward(x);
    CHECK(y.shape == std::vector<std::size_t>{3, 64, 64});

    config.scale = 1;
    RdnModel<float> refine(config, 9);
    CHECK(refine.forward(x).shape == x.shape);
}

TEST_CASE("nulled deep path reduces the model to the shallow branch") {
    RdnConfig config = tiny_config();
    RdnModel<float> model(config, 13);

    // Saturate the UNet head towards sigmoid(x) = 0 exactly.
    auto& head = model.unet().head();
    std::fill(head.weight.value.data.begin(), head.weight.value.data.end(), 0.0f);
    std::fill(head.bias.value.data.begin(), head.bias.value.data.end(), -1.0e4f);
    // Up2 must carry no bias so a zero modulation map stays zero.
    std::fill(model.up2_conv().bias.value.data.begin(), model.up2_conv().bias.value.data.end(), 0.0f);
    // Final 3x3 conv as the identity.
    auto& fin = model.final_conv();
    std::fill(fin.weight.value.data.begin(), fin.weight.value.data.end(), 0.0f);
    for (std::size_t c = 0; c < 3; ++c) fin.weight.value.at4(c, c, 1, 1) = 1.0f;
    std::fill(fin.bias.value.data.begin(), fin.bias.value.data.end(), 0.0f);

    auto x = random_tensor<float>({3, 32, 32}, 21, 0.0, 1.0);
    auto got = model.forward(x);

    auto x0 = sub_mean(x, config.channel_means);
    auto f1 = srec::numkit::pixel_shuffle(model.up1_conv().forward(x0), config.scale);
    auto want = add_mean(f1, config.channel_means);
    CHECK(got.data == want.data);  // bit-exact
}

TEST_CASE("sub_mean and add_mean invert within rounding") {
    std::array<float, 3> means{0.43f, 0.51f, 0.39f};
    auto x = random_tensor<float>({3, 8, 8}, 6, 0.0, 1.0);
    auto round = add_mean(sub_mean(x, means), means);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(std::abs(round.data[i] - x.data[i]) <= 1e-6f);
}

TEST_CASE("sr training determinism and validation") {
    RdnConfig config = tiny_config();
    std::vector<SrPair> pairs;
    for (int i = 0; i < 3; ++i) {
        SrPair p;
        p.degraded = random_tensor<float>({3, 16, 16}, 50 + i, 0.0, 1.0);
        p.target = random_tensor<float>({3, 32, 32}, 60 + i, 0.0, 1.0);
        pairs.push_back(std::move(p));
    }

    auto run = [&](std::uint64_t seed) {
        RdnModel<float> model(config, 31);
        SrTrainOptions options;
        options.config.learning_rate = 1e-3;
        options.config.epochs = 2;
        options.config.batch_size = 3;
        options.seed = seed;
        options.threads = 1;
        return train_sr(model, pairs, options).loss_history;
    };
    auto h1 = run(4);
    auto h2 = run(4);
    CHECK(h1 == h2);

    RdnModel<float> model(config, 31);
    SrTrainOptions options;
    CHECK_THROWS_AS(train_sr(model, {}, options), std::invalid_argument);

    SrPair bad;
    bad.degraded = random_tensor<float>({3, 16, 16}, 1);
    bad.target = random_tensor<float>({3, 16, 16}, 2);  // not scale * input
    CHECK_THROWS_AS(train_sr(model, {bad}, options), std::invalid_argument);
}

TEST_CASE("zero learning rate leaves the enhancer unchanged") {
    RdnConfig config = tiny_config();
    RdnModel<float> model(config, 8);
    std::vector<Tensor<float>> before;
    for (const auto* p : std::as_const(model).params()) before.push_back(p->value);

    SrPair pair;
    pair.degraded = random_tensor<float>({3, 16, 16}, 1, 0.0, 1.0);
    pair.target = random_tensor<float>({3, 32, 32}, 2, 0.0, 1.0);
    SrTrainOptions options;
    options.config.learning_rate = 0.0;
    options.config.epochs = 2;
    options.seed = 3;
    options.threads = 1;
    train_sr(model, {pair}, options);

    auto after = std::as_const(model).params();
    for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i]->value.data == before[i].data);
}

TEST_CASE("rdn checkpoint round trip") {
    test_support::TempDir dir("rdn_ckpt");
    RdnConfig config = tiny_config();
    config.channel_means = {0.41f, 0.52f, 0.33f};
    RdnModel<float> model(config, 19);
    model.train_seed = 42;

    const std::string path = dir.file("sr.bin");
    save_rdn(path, model);
    auto loaded = load_rdn(path);
    CHECK(loaded.config().rdb_count == config.rdb_count);
    CHECK(loaded.config().scale == config.scale);
    CHECK(loaded.config().channel_means == config.channel_means);
    CHECK(loaded.train_seed == 42);

    auto x = random_tensor<float>({3, 32, 32}, 77, 0.0, 1.0);
    CHECK(loaded.forward(x).data == model.forward(x).data);
}
