#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "srec/numkit/optim.hpp"
#include "srec/numkit/rng.hpp"
#include "srec/numkit/tensor.hpp"

namespace srec::numkit {

enum class Padding { Same, Valid };
enum class ActKind { Relu, Sigmoid, TanhSquash };

namespace detail {
template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
}  // namespace detail

/// 2-D convolution over C x H x W tensors, implemented as im2col plus a GEMM.
/// Forward caches the input when a cache is supplied; backward recomputes the
/// column matrix from the cache and accumulates parameter gradients.
template <typename S>
class Conv2d {
public:
    struct Cache {
        Tensor<S> input;
    };

    Conv2d(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t stride, Padding padding,
           bool with_bias, std::string name)
        : weight(name + ".weight", Tensor<S>({c_out, c_in, k, k})),
          bias(name + ".bias", Tensor<S>({c_out})),
          c_in_(c_in), c_out_(c_out), k_(k), stride_(stride), padding_(padding), with_bias_(with_bias) {
        if (stride == 0) throw std::invalid_argument("Conv2d: stride must be positive");
        if (padding == Padding::Same && k % 2 == 0)
            throw std::invalid_argument("Conv2d: same padding requires odd kernel size");
    }

    /// Uniform init in +/- sqrt(1 / (c_in * k^2)); biases stay zero.
    void init_params(Rng& rng) {
        double bound = std::sqrt(1.0 / static_cast<double>(c_in_ * k_ * k_));
        for (auto& w : weight.value.data) w = static_cast<S>(rng.uniform(-bound, bound));
        std::fill(bias.value.data.begin(), bias.value.data.end(), S(0));
    }

    Tensor<S> forward(const Tensor<S>& x, Cache* cache = nullptr) const {
        validate_input(x);
        const auto [h_out, w_out] = output_extents(x.shape[1], x.shape[2]);
        const std::size_t patch = c_in_ * k_ * k_;
        const std::size_t n_out = h_out * w_out;

        detail::Mat<S> col(patch, n_out);
        im2col(x, h_out, w_out, col);

        Tensor<S> out({c_out_, h_out, w_out});
        Eigen::Map<const detail::MatRM<S>> w_mat(weight.value.data.data(), c_out_, patch);
        Eigen::Map<detail::MatRM<S>> out_mat(out.data.data(), c_out_, n_out);
        out_mat.noalias() = w_mat * col;
        if (with_bias_) {
            for (std::size_t c = 0; c < c_out_; ++c)
                out_mat.row(c).array() += bias.value.data[c];
        }
        out.ensure_finite("conv2d forward");
        if (cache) cache->input = x;
        return out;
    }

    /// Returns the input gradient; accumulates weight/bias gradients.
    Tensor<S> backward(const Tensor<S>& grad_out, const Cache& cache) {
        const Tensor<S>& x = cache.input;
        const auto [h_out, w_out] = output_extents(x.shape[1], x.shape[2]);
        const std::size_t patch = c_in_ * k_ * k_;
        const std::size_t n_out = h_out * w_out;
        if (grad_out.shape != std::vector<std::size_t>{c_out_, h_out, w_out})
            throw std::invalid_argument("Conv2d::backward: grad shape mismatch");

        detail::Mat<S> col(patch, n_out);
        im2col(x, h_out, w_out, col);

        Eigen::Map<const detail::MatRM<S>> g_mat(grad_out.data.data(), c_out_, n_out);
        Eigen::Map<detail::MatRM<S>> dw_mat(weight.grad.data.data(), c_out_, patch);
        dw_mat.noalias() += g_mat * col.transpose();
        weight.grad_populated = true;
        if (with_bias_) {
            for (std::size_t c = 0; c < c_out_; ++c) bias.grad.data[c] += g_mat.row(c).sum();
            bias.grad_populated = true;
        }

        Eigen::Map<const detail::MatRM<S>> w_mat(weight.value.data.data(), c_out_, patch);
        detail::Mat<S> dcol(patch, n_out);
        dcol.noalias() = w_mat.transpose() * g_mat;

        Tensor<S> dx({c_in_, x.shape[1], x.shape[2]});
        col2im(dcol, h_out, w_out, dx);
        dx.ensure_finite("conv2d backward");
        return dx;
    }

    std::vector<Parameter<S>*> params() {
        std::vector<Parameter<S>*> out{&weight};
        if (with_bias_) out.push_back(&bias);
        return out;
    }

    std::size_t in_channels() const { return c_in_; }
    std::size_t out_channels() const { return c_out_; }

    Parameter<S> weight;
    Parameter<S> bias;

private:
    std::size_t c_in_, c_out_, k_, stride_;
    Padding padding_;
    bool with_bias_;

    void validate_input(const Tensor<S>& x) const {
        if (x.rank() != 3) throw std::invalid_argument("Conv2d: input must be C x H x W");
        if (x.shape[0] != c_in_)
            throw std::invalid_argument("Conv2d: input has " + std::to_string(x.shape[0]) +
                                        " channels, weight expects " + std::to_string(c_in_));
        if (padding_ == Padding::Valid && (x.shape[1] < k_ || x.shape[2] < k_))
            throw std::invalid_argument("Conv2d: input smaller than kernel with valid padding");
    }

    std::size_t pad() const { return padding_ == Padding::Same ? (k_ - 1) / 2 : 0; }

    std::pair<std::size_t, std::size_t> output_extents(std::size_t h, std::size_t w) const {
        const std::size_t p = pad();
        return {(h + 2 * p - k_) / stride_ + 1, (w + 2 * p - k_) / stride_ + 1};
    }

    void im2col(const Tensor<S>& x, std::size_t h_out, std::size_t w_out, detail::Mat<S>& col) const {
        const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(pad());
        const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(x.shape[1]);
        const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(x.shape[2]);
        for (std::size_t oy = 0; oy < h_out; ++oy) {
            for (std::size_t ox = 0; ox < w_out; ++ox) {
                const std::size_t out_idx = oy * w_out + ox;
                std::size_t row = 0;
                for (std::size_t ci = 0; ci < c_in_; ++ci) {
                    for (std::size_t ky = 0; ky < k_; ++ky) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) - p;
                        for (std::size_t kx = 0; kx < k_; ++kx, ++row) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride_ + kx) - p;
                            col(row, out_idx) = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                                    ? x(ci, iy, ix)
                                                    : S(0);
                        }
                    }
                }
            }
        }
    }

    void col2im(const detail::Mat<S>& dcol, std::size_t h_out, std::size_t w_out, Tensor<S>& dx) const {
        const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(pad());
        const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(dx.shape[1]);
        const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(dx.shape[2]);
        for (std::size_t oy = 0; oy < h_out; ++oy) {
            for (std::size_t ox = 0; ox < w_out; ++ox) {
                const std::size_t out_idx = oy * w_out + ox;
                std::size_t row = 0;
                for (std::size_t ci = 0; ci < c_in_; ++ci) {
                    for (std::size_t ky = 0; ky < k_; ++ky) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) - p;
                        for (std::size_t kx = 0; kx < k_; ++kx, ++row) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride_ + kx) - p;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < w) dx(ci, iy, ix) += dcol(row, out_idx);
                        }
                    }
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Activations

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
    Tensor<S> out = x;
    for (auto& v : out.data) v = v > S(0) ? v : S(0);
    return out;
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
    Tensor<S> out = x;
    for (auto& v : out.data) {
        if (v >= S(0)) {
            v = S(1) / (S(1) + std::exp(-v));
        } else {
            S e = std::exp(v);
            v = e / (S(1) + e);
        }
    }
    return out;
}

template <typename S>
Tensor<S> activation(const Tensor<S>& x, ActKind kind);

/// Activation layer with cached backward state. TanhSquash is
/// (1 - 2^-20) * tanh(x): strictly inside (-1, 1) even at float precision,
/// so quantization never sees the interval endpoints.
template <typename S>
class Activation {
public:
    struct Cache {
        Tensor<S> pre;   // input, kept for relu
        Tensor<S> post;  // output, kept for sigmoid / tanh
    };

    static constexpr double kSquashScale = 1.0 - 0x1.0p-20;

    explicit Activation(ActKind kind) : kind_(kind) {}

    Tensor<S> forward(const Tensor<S>& x, Cache* cache = nullptr) const {
        Tensor<S> out;
        switch (kind_) {
            case ActKind::Relu: out = relu(x); break;
            case ActKind::Sigmoid: out = sigmoid(x); break;
            case ActKind::TanhSquash: {
                out = x;
                for (auto& v : out.data) v = static_cast<S>(kSquashScale * std::tanh(static_cast<double>(v)));
                break;
            }
        }
        out.ensure_finite("activation forward");
        if (cache) {
            if (kind_ == ActKind::Relu) cache->pre = x;
            else cache->post = out;
        }
        return out;
    }

    Tensor<S> backward(const Tensor<S>& grad_out, const Cache& cache) const {
        Tensor<S> dx = grad_out;
        switch (kind_) {
            case ActKind::Relu:
                // subgradient at 0 is 0
                for (std::size_t i = 0; i < dx.data.size(); ++i)
                    if (cache.pre.data[i] <= S(0)) dx.data[i] = S(0);
                break;
            case ActKind::Sigmoid:
                for (std::size_t i = 0; i < dx.data.size(); ++i) {
                    S y = cache.post.data[i];
                    dx.data[i] *= y * (S(1) - y);
                }
                break;
            case ActKind::TanhSquash:
                for (std::size_t i = 0; i < dx.data.size(); ++i) {
                    double t = cache.post.data[i] / kSquashScale;  // tanh(x)
                    dx.data[i] = static_cast<S>(dx.data[i] * kSquashScale * (1.0 - t * t));
                }
                break;
        }
        dx.ensure_finite("activation backward");
        return dx;
    }

    ActKind kind() const { return kind_; }

private:
    ActKind kind_;
};

template <typename S>
Tensor<S> activation(const Tensor<S>& x, ActKind kind) {
    return Activation<S>(kind).forward(x);
}

// ---------------------------------------------------------------------------
// Pixel shuffle

/// (C*r^2, H, W) -> (C, rH, rW); source channel c*r^2 + dy*r + dx feeds
/// output pixel (c, r*y + dy, r*x + dx).
template <typename S>
Tensor<S> pixel_shuffle(const Tensor<S>& x, std::size_t r) {
    if (x.rank() != 3) throw std::invalid_argument("pixel_shuffle: input must be C x H x W");
    if (r == 0 || x.shape[0] % (r * r) != 0)
        throw std::invalid_argument("pixel_shuffle: channels not divisible by r^2");
    const std::size_t c_out = x.shape[0] / (r * r);
    const std::size_t h = x.shape[1], w = x.shape[2];
    Tensor<S> out({c_out, h * r, w * r});
    for (std::size_t c = 0; c < c_out; ++c)
        for (std::size_t dy = 0; dy < r; ++dy)
            for (std::size_t dx = 0; dx < r; ++dx)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx)
                        out(c, r * y + dy, r * xx + dx) = x(c * r * r + dy * r + dx, y, xx);
    return out;
}

template <typename S>
Tensor<S> pixel_unshuffle(const Tensor<S>& x, std::size_t r) {
    if (x.rank() != 3) throw std::invalid_argument("pixel_unshuffle: input must be C x H x W");
    if (r == 0 || x.shape[1] % r != 0 || x.shape[2] % r != 0)
        throw std::invalid_argument("pixel_unshuffle: extents not divisible by r");
    const std::size_t c_in = x.shape[0];
    const std::size_t h = x.shape[1] / r, w = x.shape[2] / r;
    Tensor<S> out({c_in * r * r, h, w});
    for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t dy = 0; dy < r; ++dy)
            for (std::size_t dx = 0; dx < r; ++dx)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx)
                        out(c * r * r + dy * r + dx, y, xx) = x(c, r * y + dy, r * xx + dx);
    return out;
}

// ---------------------------------------------------------------------------
// Resampling (factor fixed at 2)

enum class ResampleDir { Down, Up };

/// Down: 2x2 average pooling. Up: nearest-neighbor doubling.
template <typename S>
Tensor<S> resample(const Tensor<S>& x, ResampleDir dir) {
    if (x.rank() != 3) throw std::invalid_argument("resample: input must be C x H x W");
    const std::size_t c = x.shape[0], h = x.shape[1], w = x.shape[2];
    if (dir == ResampleDir::Down) {
        if (h % 2 != 0 || w % 2 != 0)
            throw std::invalid_argument("resample: extents not divisible by 2");
        Tensor<S> out({c, h / 2, w / 2});
        for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t y = 0; y < h / 2; ++y)
                for (std::size_t xx = 0; xx < w / 2; ++xx)
                    out(ci, y, xx) = (x(ci, 2 * y, 2 * xx) + x(ci, 2 * y, 2 * xx + 1) +
                                      x(ci, 2 * y + 1, 2 * xx) + x(ci, 2 * y + 1, 2 * xx + 1)) /
                                     S(4);
        return out;
    }
    Tensor<S> out({c, h * 2, w * 2});
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx) {
                S v = x(ci, y, xx);
                out(ci, 2 * y, 2 * xx) = v;
                out(ci, 2 * y, 2 * xx + 1) = v;
                out(ci, 2 * y + 1, 2 * xx) = v;
                out(ci, 2 * y + 1, 2 * xx + 1) = v;
            }
    return out;
}

/// Gradient of 2x2 average pooling: spread each value over its window / 4.
template <typename S>
Tensor<S> avg_pool2_backward(const Tensor<S>& grad_out) {
    const std::size_t c = grad_out.shape[0], h = grad_out.shape[1], w = grad_out.shape[2];
    Tensor<S> dx({c, h * 2, w * 2});
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx) {
                S g = grad_out(ci, y, xx) / S(4);
                dx(ci, 2 * y, 2 * xx) = g;
                dx(ci, 2 * y, 2 * xx + 1) = g;
                dx(ci, 2 * y + 1, 2 * xx) = g;
                dx(ci, 2 * y + 1, 2 * xx + 1) = g;
            }
    return dx;
}

/// Gradient of nearest-neighbor doubling: sum each 2x2 block.
template <typename S>
Tensor<S> upsample2_backward(const Tensor<S>& grad_out) {
    const std::size_t c = grad_out.shape[0], h = grad_out.shape[1] / 2, w = grad_out.shape[2] / 2;
    Tensor<S> dx({c, h, w});
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx)
                dx(ci, y, xx) = grad_out(ci, 2 * y, 2 * xx) + grad_out(ci, 2 * y, 2 * xx + 1) +
                                grad_out(ci, 2 * y + 1, 2 * xx) + grad_out(ci, 2 * y + 1, 2 * xx + 1);
    return dx;
}

// ---------------------------------------------------------------------------
// Channel concatenation

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.shape[1] != b.shape[1] || a.shape[2] != b.shape[2])
        throw std::invalid_argument("concat_channels: spatial extents differ");
    Tensor<S> out({a.shape[0] + b.shape[0], a.shape[1], a.shape[2]});
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

/// Slice channels [c0, c0+len) out of a C x H x W tensor.
template <typename S>
Tensor<S> slice_channels(const Tensor<S>& x, std::size_t c0, std::size_t len) {
    if (c0 + len > x.shape[0]) throw std::invalid_argument("slice_channels: out of range");
    Tensor<S> out({len, x.shape[1], x.shape[2]});
    const std::size_t plane = x.shape[1] * x.shape[2];
    std::copy(x.data.begin() + c0 * plane, x.data.begin() + (c0 + len) * plane, out.data.begin());
    return out;
}

// ---------------------------------------------------------------------------
// Loss

/// Mean of squared differences.
template <typename S>
S mse_loss(const Tensor<S>& prediction, const Tensor<S>& target) {
    check_same_shape(prediction, target, "mse_loss");
    if (prediction.numel() == 0) throw std::invalid_argument("mse_loss: empty tensors");
    double acc = 0.0;
    for (std::size_t i = 0; i < prediction.data.size(); ++i) {
        double d = static_cast<double>(prediction.data[i]) - static_cast<double>(target.data[i]);
        acc += d * d;
    }
    double loss = acc / static_cast<double>(prediction.numel());
    if (!std::isfinite(loss)) throw std::runtime_error("non-finite value after mse_loss");
    return static_cast<S>(loss);
}

/// d(mse)/d(prediction) = 2 (prediction - target) / N.
template <typename S>
Tensor<S> mse_loss_grad(const Tensor<S>& prediction, const Tensor<S>& target) {
    check_same_shape(prediction, target, "mse_loss_grad");
    Tensor<S> g = prediction;
    const S inv = S(2) / static_cast<S>(prediction.numel());
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = inv * (prediction.data[i] - target.data[i]);
    return g;
}

}  // namespace srec::numkit
