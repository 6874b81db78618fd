#include "doctest.h"

#include <cmath>

#include "srec/numkit/layers.hpp"
#include "test_support.hpp"

using namespace srec::numkit;
using test_support::random_tensor;

namespace {

/// Naive sliding-window convolution, the independent oracle for Conv2d.
template <typename S>
Tensor<S> conv_oracle(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias,
                      std::size_t stride, Padding padding) {
    const std::size_t c_out = w.shape[0], c_in = w.shape[1], k = w.shape[2];
    const std::ptrdiff_t p = padding == Padding::Same ? static_cast<std::ptrdiff_t>((k - 1) / 2) : 0;
    const std::size_t h_out = (x.shape[1] + 2 * p - k) / stride + 1;
    const std::size_t w_out = (x.shape[2] + 2 * p - k) / stride + 1;
    Tensor<S> out({c_out, h_out, w_out});
    for (std::size_t co = 0; co < c_out; ++co)
        for (std::size_t oy = 0; oy < h_out; ++oy)
            for (std::size_t ox = 0; ox < w_out; ++ox) {
                double acc = bias ? static_cast<double>(bias->data[co]) : 0.0;
                for (std::size_t ci = 0; ci < c_in; ++ci)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - p;
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - p;
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.shape[1]) || ix < 0 ||
                                ix >= static_cast<std::ptrdiff_t>(x.shape[2]))
                                continue;
                            acc += static_cast<double>(x(ci, iy, ix)) *
                                   static_cast<double>(w.at4(co, ci, ky, kx));
                        }
                out(co, oy, ox) = static_cast<S>(acc);
            }
    return out;
}

}  // namespace

TEST_CASE("tensor invariants") {
    Tensor<float> t({2, 3, 4});
    CHECK(t.numel() == 24);
    CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>(5)), std::invalid_argument);

    Tensor<float> bad({2}, {1.0f, std::nanf("")});
    CHECK_THROWS_AS(bad.ensure_finite("test"), std::runtime_error);

    CHECK_THROWS_AS(add(Tensor<float>({2}), Tensor<float>({3})), std::invalid_argument);
}

TEST_CASE("conv2d identity kernel preserves the input") {
    Conv2d<double> conv(1, 1, 1, 1, Padding::Same, false, "id");
    conv.weight.value.data[0] = 1.0;
    auto x = random_tensor<double>({1, 3, 3}, 7);
    auto y = conv.forward(x);
    CHECK(y.shape == x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("conv2d all-ones valid window sums to 9") {
    Conv2d<double> conv(1, 1, 3, 1, Padding::Valid, false, "sum");
    std::fill(conv.weight.value.data.begin(), conv.weight.value.data.end(), 1.0);
    Tensor<double> x = Tensor<double>::full({1, 3, 3}, 1.0);
    auto y = conv.forward(x);
    CHECK(y.shape == std::vector<std::size_t>{1, 1, 1});
    CHECK(y.data[0] == doctest::Approx(9.0));
}

TEST_CASE("conv2d matches the sliding-window oracle at 64-bit") {
    for (auto [stride, padding] : {std::pair{std::size_t(1), Padding::Same},
                                   {std::size_t(1), Padding::Valid},
                                   {std::size_t(2), Padding::Same}}) {
        Conv2d<double> conv(2, 3, 3, stride, padding, true, "rand");
        Rng rng(42);
        conv.init_params(rng);
        for (auto& b : conv.bias.value.data) b = rng.uniform(-0.5, 0.5);
        auto x = random_tensor<double>({2, 5, 5}, 99);
        auto got = conv.forward(x);
        auto want = conv_oracle(x, conv.weight.value, &conv.bias.value, stride, padding);
        REQUIRE(got.shape == want.shape);
        for (std::size_t i = 0; i < got.data.size(); ++i)
            CHECK(std::abs(got.data[i] - want.data[i]) < 1e-12);
    }
}

TEST_CASE("conv2d rejects channel mismatch and undersized valid input") {
    Conv2d<float> conv(3, 4, 3, 1, Padding::Valid, true, "chk");
    CHECK_THROWS_AS(conv.forward(Tensor<float>({2, 5, 5})), std::invalid_argument);
    CHECK_THROWS_AS(conv.forward(Tensor<float>({3, 2, 2})), std::invalid_argument);
    CHECK_THROWS_AS(Conv2d<float>(1, 1, 2, 1, Padding::Same, false, "even"), std::invalid_argument);
}

TEST_CASE("pixel_shuffle shape contract and r=1 identity") {
    auto x = random_tensor<float>({4, 2, 2}, 3);
    auto y = pixel_shuffle(x, 2);
    CHECK(y.shape == std::vector<std::size_t>{1, 4, 4});

    auto same = pixel_shuffle(x, 1);
    CHECK(same.shape == x.shape);
    CHECK(same.data == x.data);

    CHECK_THROWS_AS(pixel_shuffle(Tensor<float>({3, 2, 2}), 2), std::invalid_argument);
}

TEST_CASE("pixel_shuffle matches the index-permutation oracle") {
    Tensor<float> x({4, 2, 2});
    for (std::size_t i = 0; i < 16; ++i) x.data[i] = static_cast<float>(i);
    auto y = pixel_shuffle(x, 2);
    const std::size_t r = 2;
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t h = 0; h < 2; ++h)
            for (std::size_t w = 0; w < 2; ++w) {
                std::size_t delta = c;  // c = 0*r*r + delta with c_out = 1
                std::size_t row = r * h + delta / r, col = r * w + delta % r;
                CHECK(y(0, row, col) == x(c, h, w));
            }
}

TEST_CASE("pixel_unshuffle inverts pixel_shuffle exhaustively") {
    for (std::size_t c : {1u, 2u, 3u, 4u, 8u})
        for (std::size_t h : {1u, 2u, 4u})
            for (std::size_t w : {1u, 2u, 4u})
                for (std::size_t r : {std::size_t(1), std::size_t(2)}) {
                    if (c % (r * r) != 0) continue;
                    auto x = random_tensor<float>({c, h, w}, c * 100 + h * 10 + w);
                    auto round = pixel_unshuffle(pixel_shuffle(x, r), r);
                    CHECK(round.shape == x.shape);
                    CHECK(round.data == x.data);
                }
}

TEST_CASE("activation examples") {
    Tensor<double> x({3}, {-1.0, 0.0, 2.0});
    auto r = relu(x);
    CHECK(r.data == std::vector<double>{0.0, 0.0, 2.0});

    Tensor<double> zero({1}, {0.0});
    CHECK(sigmoid(zero).data[0] == doctest::Approx(0.5));

    // relu backward at [-1, 2] with upstream [1, 1] -> [0, 1]
    Activation<double> act(ActKind::Relu);
    Activation<double>::Cache cache;
    Tensor<double> in({2}, {-1.0, 2.0});
    act.forward(in, &cache);
    auto g = act.backward(Tensor<double>({2}, {1.0, 1.0}), cache);
    CHECK(g.data == std::vector<double>{0.0, 1.0});
}

TEST_CASE("relu is idempotent") {
    auto x = random_tensor<float>({64}, 5, -2.0, 2.0);
    auto once = relu(x);
    auto twice = relu(once);
    CHECK(once.data == twice.data);
}

TEST_CASE("forward ops are deterministic") {
    Conv2d<float> conv(3, 8, 3, 1, Padding::Same, true, "det");
    Rng rng(11);
    conv.init_params(rng);
    auto x = random_tensor<float>({3, 8, 8}, 21);
    auto a = conv.forward(x);
    auto b = conv.forward(x);
    CHECK(a.data == b.data);  // bit-identical
}

TEST_CASE("resample examples") {
    auto down = resample(Tensor<float>::full({1, 4, 4}, 1.0f), ResampleDir::Down);
    CHECK(down.shape == std::vector<std::size_t>{1, 2, 2});
    for (float v : down.data) CHECK(v == doctest::Approx(1.0f));

    auto up = resample(Tensor<float>::full({1, 2, 2}, 2.0f), ResampleDir::Up);
    CHECK(up.shape == std::vector<std::size_t>{1, 4, 4});
    for (float v : up.data) CHECK(v == doctest::Approx(2.0f));

    Tensor<float> block({1, 2, 2}, {1, 2, 3, 4});
    CHECK(resample(block, ResampleDir::Down).data[0] == doctest::Approx(2.5f));

    CHECK_THROWS_AS(resample(Tensor<float>({1, 3, 3}), ResampleDir::Down), std::invalid_argument);

    // up(down(constant)) == constant
    auto c = Tensor<float>::full({2, 4, 4}, 0.7f);
    auto round = resample(resample(c, ResampleDir::Down), ResampleDir::Up);
    CHECK(round.data == c.data);
}

TEST_CASE("mse_loss examples and properties") {
    auto a = random_tensor<double>({4, 4}, 1);
    CHECK(mse_loss(a, a) == doctest::Approx(0.0));

    Tensor<double> shifted = a;
    for (auto& v : shifted.data) v += 0.1;
    CHECK(mse_loss(shifted, a) == doctest::Approx(0.01));

    auto b = random_tensor<double>({4, 4}, 2);
    double direct = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        direct += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    direct /= static_cast<double>(a.numel());
    CHECK(std::abs(mse_loss(a, b) - direct) < 1e-12);

    CHECK(mse_loss(a, b) >= 0.0);
    CHECK_THROWS_AS(mse_loss(a, Tensor<double>({3})), std::invalid_argument);
}
