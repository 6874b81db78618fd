#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "srec/numkit/optim.hpp"
#include "srec/numkit/rng.hpp"
#include "srec/numkit/tensor.hpp"

namespace srec::numkit {

struct GradCheckConfig {
    double h = 1e-5;
    double tolerance = 1e-4;
    std::size_t max_param_coords = 120;  // sampled when a parameter is larger
    std::size_t max_input_coords = 120;
    std::uint64_t seed = 0x5eed;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    std::string worst_coordinate;
    bool passed = false;
};

/// Central finite differences against the analytic backward pass, on the
/// scalar loss L = sum(R .* f(x)) with a fixed random weighting R. Runs at
/// 64-bit precision only. Fragments expose
///   Tensor<double> forward(const Tensor<double>&, Cache*)
///   Tensor<double> backward(const Tensor<double>&, const Cache&)
/// and optionally params().
template <typename Fragment>
GradCheckReport grad_check(Fragment& fragment, const Tensor<double>& input, GradCheckConfig cfg = {}) {
    Rng rng(cfg.seed);

    auto loss_of = [&](const Tensor<double>& x, const Tensor<double>& weights) {
        Tensor<double> y = fragment.forward(x, nullptr);
        double acc = 0;
        for (std::size_t i = 0; i < y.data.size(); ++i) acc += weights.data[i] * y.data[i];
        return acc;
    };

    typename Fragment::Cache cache;
    Tensor<double> y = fragment.forward(input, &cache);
    Tensor<double> upstream = y;
    for (auto& v : upstream.data) v = rng.uniform(-1.0, 1.0);

    std::vector<Parameter<double>*> params;
    if constexpr (requires { fragment.params(); }) {
        params = fragment.params();
        for (auto* p : params) p->zero_grad();
    }
    Tensor<double> dx = fragment.backward(upstream, cache);
    dx.ensure_finite("grad_check analytic input gradient");
    for (auto* p : params) p->grad.ensure_finite("grad_check analytic parameter gradient");

    // Errors are measured relative to the gradient scale of the whole check;
    // otherwise coordinates behind dead ReLU paths (gradients ~1e-7 against a
    // finite-difference noise floor ~1e-8) would dominate the report.
    double grad_scale = 1e-8;
    for (double g : dx.data) grad_scale = std::max(grad_scale, std::abs(g));
    for (const auto* p : params)
        for (double g : p->grad.data) grad_scale = std::max(grad_scale, std::abs(g));

    GradCheckReport report;
    auto record = [&](double analytic, double fd, const std::string& label) {
        double denom = std::max({std::abs(analytic) + std::abs(fd), 1e-4 * grad_scale, 1e-8});
        double rel = std::abs(analytic - fd) / denom;
        ++report.coords_checked;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_coordinate = label;
        }
    };

    auto sample_indices = [&](std::size_t n, std::size_t cap) {
        std::vector<std::size_t> idx;
        if (n <= cap) {
            idx.resize(n);
            for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        } else {
            idx.reserve(cap);
            for (std::size_t i = 0; i < cap; ++i) idx.push_back(rng.below(n));
        }
        return idx;
    };

    // Input coordinates
    Tensor<double> x = input;
    for (std::size_t i : sample_indices(x.data.size(), cfg.max_input_coords)) {
        const double saved = x.data[i];
        x.data[i] = saved + cfg.h;
        double lp = loss_of(x, upstream);
        x.data[i] = saved - cfg.h;
        double lm = loss_of(x, upstream);
        x.data[i] = saved;
        record(dx.data[i], (lp - lm) / (2 * cfg.h), "input[" + std::to_string(i) + "]");
    }

    // Parameter coordinates
    for (auto* p : params) {
        for (std::size_t i : sample_indices(p->value.data.size(), cfg.max_param_coords)) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + cfg.h;
            double lp = loss_of(input, upstream);
            p->value.data[i] = saved - cfg.h;
            double lm = loss_of(input, upstream);
            p->value.data[i] = saved;
            record(p->grad.data[i], (lp - lm) / (2 * cfg.h), p->name + "[" + std::to_string(i) + "]");
        }
    }

    for (auto* p : params) p->zero_grad();
    report.passed = report.max_rel_error < cfg.tolerance;
    return report;
}

}  // namespace srec::numkit
