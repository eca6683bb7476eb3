#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexconn/network.hpp"
#include "flexconn/optim.hpp"
#include "flexconn/targets.hpp"

namespace flexconn {

/// Defaults follow the published regime: Adam at a fixed learning rate of
/// 1e-4 for 20 epochs, training batch 128, inference batch 64, 20% of the
/// patches held out for validation.
struct TrainingConfig {
    int epochs = 20;
    int batch_size = 128;
    double learning_rate = 1e-4;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    int patch_h = 35, patch_w = 35;
    int val_batch_size = 64;

    void validate() const {
        require(epochs >= 0, "epochs must be >= 0");
        require(batch_size >= 1, "batch_size must be >= 1");
        require(learning_rate >= 0.0, "learning_rate must be >= 0");
        require(validation_fraction > 0.0 && validation_fraction < 1.0,
                "validation_fraction must be in (0,1)");
        require(val_batch_size >= 1, "val_batch_size must be >= 1");
    }
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;  // wall clock, excluded from determinism guarantees
};

struct TrainingLog {
    std::vector<EpochStats> epochs;
};

namespace train_detail {

// gather patch subset `idx[first..last)` into per-contrast batch tensors
inline void gather_batch(const PatchSet& set, const std::vector<std::size_t>& idx,
                         std::size_t first, std::size_t last,
                         std::vector<Tensor4<float>>& inputs, Tensor4<float>& target) {
    const int n = static_cast<int>(last - first);
    const std::size_t plane = static_cast<std::size_t>(set.targets.h) * set.targets.w;
    inputs.clear();
    for (const auto& c : set.contrasts) {
        Tensor4<float> t(n, 1, c.h, c.w);
        for (int i = 0; i < n; ++i)
            std::copy_n(c.data.begin() +
                            static_cast<std::ptrdiff_t>(idx[first + static_cast<std::size_t>(i)] * plane),
                        plane, t.data.begin() + static_cast<std::ptrdiff_t>(i) * static_cast<std::ptrdiff_t>(plane));
        inputs.push_back(std::move(t));
    }
    target = Tensor4<float>(n, 1, set.targets.h, set.targets.w);
    for (int i = 0; i < n; ++i)
        std::copy_n(set.targets.data.begin() +
                        static_cast<std::ptrdiff_t>(idx[first + static_cast<std::size_t>(i)] * plane),
                    plane, target.data.begin() + static_cast<std::ptrdiff_t>(i) * static_cast<std::ptrdiff_t>(plane));
}

// mean per-element squared error of a network over a patch set, in batches
inline double evaluate_loss(const Network<float>& net, const PatchSet& set, int batch_size) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(set.count()));
    std::iota(idx.begin(), idx.end(), 0u);
    double acc = 0.0;
    long long total = 0;
    std::vector<Tensor4<float>> inputs;
    Tensor4<float> target;
    for (std::size_t first = 0; first < idx.size(); first += static_cast<std::size_t>(batch_size)) {
        const std::size_t last = std::min(idx.size(), first + static_cast<std::size_t>(batch_size));
        gather_batch(set, idx, first, last, inputs, target);
        const Tensor4<float> pred = forward_training(net, inputs);
        const MseResult<float> mse = mse_loss(pred, target);
        acc += mse.loss * static_cast<double>(last - first);
        total += static_cast<long long>(last - first);
    }
    return acc / static_cast<double>(total);
}

}  // namespace train_detail

/// Mini-batch training: seeded 80/20 split, fresh shuffle per epoch, MSE on
/// the membership targets, bias-corrected Adam (beta1 0.9, beta2 0.999,
/// eps 1e-8), the final partial batch averaged over its own size. Runs the
/// fixed number of epochs; a non-finite loss aborts with a diagnostic instead
/// of recovering. Deterministic for fixed (net, data, config).
inline TrainingLog train(Network<float>& net, const PatchSet& data, const TrainingConfig& cfg) {
    cfg.validate();
    require(data.count() > 0, "train: empty patch set");
    require(data.contrasts.size() == net.contrast_pathways.size(),
            "train: patch set contrast count does not match the network");

    TrainingLog log;
    if (cfg.epochs == 0) return log;

    auto [train_set, val_set] = split_train_validation(data, cfg.validation_fraction, cfg.seed);
    if (val_set.count() == 0) throw std::runtime_error("train: empty validation split");
    if (train_set.count() == 0) throw std::runtime_error("train: empty training split");

    Rng shuffle_rng(mix_seed(cfg.seed, 1));
    AdamState<float> adam;
    adam.lr = cfg.learning_rate;

    std::vector<std::size_t> idx(static_cast<std::size_t>(train_set.count()));
    std::iota(idx.begin(), idx.end(), 0u);

    std::vector<Tensor4<float>> inputs;
    Tensor4<float> target;
    ForwardCache<float> cache;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(idx);

        double acc = 0.0;
        long long total = 0;
        int batch_no = 0;
        for (std::size_t first = 0; first < idx.size();
             first += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t last =
                std::min(idx.size(), first + static_cast<std::size_t>(cfg.batch_size));
            ++batch_no;
            train_detail::gather_batch(train_set, idx, first, last, inputs, target);
            try {
                const Tensor4<float> pred = forward_training(net, inputs, &cache);
                const MseResult<float> mse = mse_loss(pred, target);
                if (!std::isfinite(mse.loss)) throw NumericError("non-finite loss");
                const Network<float> grads = backward_training(net, inputs, cache, mse.grad);
                auto params = parameter_blocks(net);
                auto gblocks = parameter_blocks(grads);
                adam_step<float>(params, gblocks, adam);
                acc += mse.loss * static_cast<double>(last - first);
                total += static_cast<long long>(last - first);
            } catch (const NumericError& e) {
                throw NumericError("train: aborting at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_no) + ": " + e.what());
            }
        }

        EpochStats st;
        st.train_loss = acc / static_cast<double>(total);
        st.val_loss = train_detail::evaluate_loss(net, val_set, cfg.val_batch_size);
        if (!std::isfinite(st.val_loss))
            throw NumericError("train: non-finite validation loss at epoch " +
                                     std::to_string(epoch) + "; aborting");
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.epochs.push_back(st);
    }
    return log;
}

/// Two independently trained models, one per rater's masks, with independent
/// seeds; their memberships are averaged downstream.
inline std::pair<Network<float>, Network<float>> train_two_raters(
    const NetworkConfig& config, std::uint64_t seed1, std::uint64_t seed2,
    const PatchSet& data_r1, const PatchSet& data_r2, const TrainingConfig& cfg) {
    require(data_r1.count() > 0 && data_r2.count() > 0, "train_two_raters: empty patch set");
    Network<float> n1 = build_network<float>(config, seed1);
    Network<float> n2 = build_network<float>(config, seed2);
    TrainingConfig c1 = cfg, c2 = cfg;
    c1.seed = seed1;
    c2.seed = seed2;
    train(n1, data_r1, c1);
    train(n2, data_r2, c2);
    return {std::move(n1), std::move(n2)};
}

/// CSV: header then one row per epoch. Losses carry full precision so two
/// deterministic runs produce byte-identical loss columns; the seconds column
/// is wall clock.
inline void write_training_log_csv(const TrainingLog& log, std::ostream& out) {
    out << "epoch,train_loss,val_loss,seconds\n";
    char buf[128];
    for (std::size_t i = 0; i < log.epochs.size(); ++i) {
        const EpochStats& e = log.epochs[i];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.3f\n", i + 1, e.train_loss, e.val_loss,
                      e.seconds);
        out << buf;
    }
}

}  // namespace flexconn
