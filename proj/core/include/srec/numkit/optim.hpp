#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "srec/numkit/tensor.hpp"

namespace srec::numkit {

/// Trainable tensor with its gradient buffer and Adam state.
template <typename S>
struct Parameter {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;
    Tensor<S> m;  // first moment
    Tensor<S> v;  // second moment
    std::int64_t t = 0;
    bool grad_populated = false;

    Parameter(std::string param_name, Tensor<S> init)
        : name(std::move(param_name)),
          value(std::move(init)),
          grad(value.shape),
          m(value.shape),
          v(value.shape) {}

    void zero_grad() {
        std::fill(grad.data.begin(), grad.data.end(), S(0));
        grad_populated = false;
    }

    std::size_t numel() const { return value.numel(); }
};

struct TrainConfig {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 8;
    std::size_t epochs = 50;
    double weight_decay = 0.0;
    double grad_clip = 0.0;  // 0 disables clipping

    void validate() const {
        // Zero is tolerated so a no-op training run stays expressible.
        if (learning_rate < 0) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
        if (epsilon <= 0) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
    }
};

/// What a training run reports back.
struct TrainResult {
    std::vector<double> loss_history;  // one entry per optimizer step
    double initial_holdout_mse = 0;
    double final_holdout_mse = 0;
    std::size_t steps = 0;
};

/// Bias-corrected Adam update over all parameters. Requires every gradient to
/// have been populated by a backward pass; clears gradients afterwards.
template <typename S>
void adam_step(const std::vector<Parameter<S>*>& params, const TrainConfig& config) {
    config.validate();
    for (const auto* p : params)
        if (!p->grad_populated)
            throw std::runtime_error("adam_step: parameter '" + p->name + "' has no gradient");

    if (config.grad_clip > 0) {
        double norm_sq = 0;
        for (const auto* p : params)
            for (S g : p->grad.data) norm_sq += static_cast<double>(g) * static_cast<double>(g);
        double norm = std::sqrt(norm_sq);
        if (norm > config.grad_clip) {
            S scale = static_cast<S>(config.grad_clip / norm);
            for (auto* p : params)
                for (auto& g : p->grad.data) g *= scale;
        }
    }

    for (auto* p : params) {
        p->t += 1;
        const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(p->t));
        const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(p->t));
        for (std::size_t i = 0; i < p->value.data.size(); ++i) {
            double g = static_cast<double>(p->grad.data[i]);
            if (config.weight_decay > 0) g += config.weight_decay * static_cast<double>(p->value.data[i]);
            double m = config.beta1 * static_cast<double>(p->m.data[i]) + (1.0 - config.beta1) * g;
            double v = config.beta2 * static_cast<double>(p->v.data[i]) + (1.0 - config.beta2) * g * g;
            p->m.data[i] = static_cast<S>(m);
            p->v.data[i] = static_cast<S>(v);
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            p->value.data[i] -= static_cast<S>(config.learning_rate * m_hat /
                                               (std::sqrt(v_hat) + config.epsilon));
        }
        p->value.ensure_finite("adam_step");
        p->zero_grad();
    }
}

}  // namespace srec::numkit
