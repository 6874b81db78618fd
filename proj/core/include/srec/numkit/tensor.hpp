#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace srec::numkit {

/// Dense N-dimensional array in channel-first layout (C x H x W for images,
/// C_out x C_in x k x k for conv weights). Scalar type is float for training
/// and simulation, double for gradient checking.
template <typename S>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<S> data;
    std::vector<S> grad;  // empty unless allocated; same length as data when present

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> extents)
        : shape(std::move(extents)), data(count(shape), S(0)) {}

    Tensor(std::vector<std::size_t> extents, std::vector<S> values)
        : shape(std::move(extents)), data(std::move(values)) {
        if (data.size() != count(shape))
            throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape product " + std::to_string(count(shape)));
    }

    static std::size_t count(const std::vector<std::size_t>& extents) {
        return std::accumulate(extents.begin(), extents.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; });
    }

    static Tensor zeros(std::vector<std::size_t> extents) { return Tensor(std::move(extents)); }

    static Tensor full(std::vector<std::size_t> extents, S value) {
        Tensor t(std::move(extents));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t extent(std::size_t axis) const {
        if (axis >= shape.size()) throw std::invalid_argument("Tensor::extent: axis out of range");
        return shape[axis];
    }

    // 3-D image indexing (c, y, x)
    S& operator()(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
    S operator()(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * shape[1] + y) * shape[2] + x];
    }

    // 4-D weight indexing (o, i, y, x)
    S& at4(std::size_t o, std::size_t i, std::size_t y, std::size_t x) {
        return data[((o * shape[1] + i) * shape[2] + y) * shape[3] + x];
    }
    S at4(std::size_t o, std::size_t i, std::size_t y, std::size_t x) const {
        return data[((o * shape[1] + i) * shape[2] + y) * shape[3] + x];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    void alloc_grad() { grad.assign(data.size(), S(0)); }
    bool has_grad() const { return !grad.empty(); }

    /// Throws if any value is NaN or Inf; `context` names the producing op.
    void ensure_finite(const char* context) const {
        for (S v : data) {
            if (!std::isfinite(static_cast<double>(v)))
                throw std::runtime_error(std::string("non-finite value after ") + context);
        }
    }

    template <typename T>
    Tensor<T> cast() const {
        Tensor<T> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
        return out;
    }
};

template <typename S>
void check_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

// Elementwise arithmetic. No broadcasting: shapes must match exactly
// (scalar overloads are provided separately).
template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a, b, "add");
    Tensor<S> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a, b, "sub");
    Tensor<S> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a, b, "mul");
    Tensor<S> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S s) {
    Tensor<S> out = a;
    for (auto& v : out.data) v *= s;
    return out;
}

template <typename S>
void add_inplace(Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a, b, "add_inplace");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

}  // namespace srec::numkit
