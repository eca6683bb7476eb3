#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexconn/tensor.hpp"

namespace flexconn {

/// Adam moment buffers plus hyperparameters. Moments live in the same
/// precision as the parameters; the update arithmetic runs in double.
/// Defaults: lr 1e-4, beta1 0.9, beta2 0.999, eps 1e-8.
template <typename T>
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<std::vector<T>> m, v;

    bool initialized() const { return !m.empty(); }
};

/// One bias-corrected Adam update across matching parameter/gradient blocks.
/// The step counter is incremented before use, so the first call runs at t=1.
/// Moment buffers are allocated lazily on the first call.
template <typename T>
void adam_step(std::span<std::span<T>> params, std::span<std::span<const T>> grads,
               AdamState<T>& state) {
    require(params.size() == grads.size(), "adam_step: block count mismatch");
    if (!state.initialized()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t b = 0; b < params.size(); ++b) {
            state.m[b].assign(params[b].size(), T(0));
            state.v[b].assign(params[b].size(), T(0));
        }
    }
    require(state.m.size() == params.size(), "adam_step: state block count mismatch");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (std::size_t b = 0; b < params.size(); ++b) {
        require(params[b].size() == grads[b].size() && params[b].size() == state.m[b].size(),
                "adam_step: block size mismatch");
        T* p = params[b].data();
        const T* g = grads[b].data();
        T* m = state.m[b].data();
        T* v = state.v[b].data();
        for (std::size_t i = 0; i < params[b].size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            if (!std::isfinite(gi))
                throw NumericError("adam_step: non-finite gradient in block " +
                                         std::to_string(b) + " at index " + std::to_string(i));
            const double mi = state.beta1 * static_cast<double>(m[i]) + (1.0 - state.beta1) * gi;
            const double vi = state.beta2 * static_cast<double>(v[i]) + (1.0 - state.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            p[i] = static_cast<T>(static_cast<double>(p[i]) -
                                  state.lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

}  // namespace flexconn
