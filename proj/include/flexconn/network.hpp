#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexconn/conv.hpp"
#include "flexconn/rng.hpp"
#include "flexconn/tensor.hpp"

namespace flexconn {

struct FilterBank {
    int num_filters = 0;
    int kernel = 0;
};

/// Ordered filter banks of one convolutional pathway. The standard structure
/// for depth d is filter counts 8*2^(d-1) .. 8 with kernel sizes alternating
/// 3,5,3,5,... which reproduces the published five-bank pathway at d = 5:
/// (128,3) (64,5) (32,3) (16,5) (8,3).
struct PathwayConfig {
    std::vector<FilterBank> banks;

    static PathwayConfig with_depth(int depth) {
        require(depth >= 2 && depth <= 6, "pathway depth must be between 2 and 6");
        PathwayConfig cfg;
        for (int i = 0; i < depth; ++i)
            cfg.banks.push_back({8 << (depth - 1 - i), (i % 2 == 0) ? 3 : 5});
        return cfg;
    }

    int depth() const { return static_cast<int>(banks.size()); }

    void validate() const {
        require(depth() >= 2 && depth() <= 6, "pathway depth must be between 2 and 6");
        for (int i = 0; i < depth(); ++i) {
            const FilterBank& b = banks[static_cast<std::size_t>(i)];
            require(b.kernel == ((i % 2 == 0) ? 3 : 5),
                    "pathway kernels must alternate 3,5,3,5,... starting at 3");
            require(b.num_filters == 8 << (depth() - 1 - i),
                    "pathway filter counts must halve from 8*2^(depth-1) down to 8");
        }
    }
};

struct NetworkConfig {
    int num_contrasts = 2;  // MPRAGE + FLAIR
    PathwayConfig contrast_pathway = PathwayConfig::with_depth(5);
    PathwayConfig fusion_pathway = PathwayConfig::with_depth(5);
    int head_kernel = 3;

    void validate() const {
        require(num_contrasts >= 1, "num_contrasts must be >= 1");
        contrast_pathway.validate();
        fusion_pathway.validate();
        require(head_kernel == 3, "membership head kernel must be 3");
    }

    int fusion_input_channels() const {
        return contrast_pathway.banks.back().num_filters * num_contrasts;
    }
};

/// Parameter set of the full network: one pathway per contrast, a fusion
/// pathway over the concatenated pathway outputs, and a single-filter head.
/// Every bank is a convolution followed by ReLU; the head output is clamped
/// to [0, 1] at inference only.
template <typename T>
struct Network {
    NetworkConfig config;
    std::vector<std::vector<Conv2DLayer<T>>> contrast_pathways;  // [contrast][bank]
    std::vector<Conv2DLayer<T>> fusion_pathway;
    Conv2DLayer<T> head;
};

namespace detail {

template <typename T>
void init_layer(Conv2DLayer<T>& layer, Rng& rng) {
    const int k = layer.kernel();
    const double fan_in = static_cast<double>(k) * k * layer.in_channels();
    const double fan_out = static_cast<double>(k) * k * layer.out_channels();
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (T& w : layer.weights.data) w = static_cast<T>(rng.uniform(-bound, bound));
    // biases start at zero
}

}  // namespace detail

/// Deterministic for a fixed (config, seed): weights drawn uniformly in
/// +-sqrt(6/(fan_in+fan_out)) from one seeded stream, biases zero.
template <typename T>
Network<T> build_network(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Network<T> net;
    net.config = config;
    Rng rng(seed);

    net.contrast_pathways.resize(static_cast<std::size_t>(config.num_contrasts));
    for (auto& pathway : net.contrast_pathways) {
        int c_in = 1;
        for (const FilterBank& b : config.contrast_pathway.banks) {
            auto layer = make_conv_layer<T>(b.num_filters, c_in, b.kernel);
            detail::init_layer(layer, rng);
            pathway.push_back(std::move(layer));
            c_in = b.num_filters;
        }
    }

    int c_in = config.fusion_input_channels();
    for (const FilterBank& b : config.fusion_pathway.banks) {
        auto layer = make_conv_layer<T>(b.num_filters, c_in, b.kernel);
        detail::init_layer(layer, rng);
        net.fusion_pathway.push_back(std::move(layer));
        c_in = b.num_filters;
    }

    net.head = make_conv_layer<T>(1, c_in, config.head_kernel);
    detail::init_layer(net.head, rng);
    return net;
}

template <typename T, typename Fn>
void for_each_layer(Network<T>& net, Fn&& fn) {
    for (auto& pathway : net.contrast_pathways)
        for (auto& layer : pathway) fn(layer);
    for (auto& layer : net.fusion_pathway) fn(layer);
    fn(net.head);
}

template <typename T, typename Fn>
void for_each_layer(const Network<T>& net, Fn&& fn) {
    for (const auto& pathway : net.contrast_pathways)
        for (const auto& layer : pathway) fn(layer);
    for (const auto& layer : net.fusion_pathway) fn(layer);
    fn(net.head);
}

struct ParameterCounts {
    long long weights = 0;
    long long biases = 0;
};

template <typename T>
ParameterCounts count_parameters(const Network<T>& net) {
    ParameterCounts pc;
    for_each_layer(net, [&](const Conv2DLayer<T>& l) {
        pc.weights += layer_weight_count(l);
        pc.biases += l.out_channels();
    });
    return pc;
}

/// Canonical flat view of all parameters: contrast pathways in contrast
/// order, banks in order, weights then bias; then fusion banks; then head.
/// The optimizer and the model file share this order.
template <typename T>
std::vector<std::span<T>> parameter_blocks(Network<T>& net) {
    std::vector<std::span<T>> blocks;
    for_each_layer(net, [&](Conv2DLayer<T>& l) {
        blocks.emplace_back(l.weights.data);
        blocks.emplace_back(l.bias);
    });
    return blocks;
}

template <typename T>
std::vector<std::span<const T>> parameter_blocks(const Network<T>& net) {
    std::vector<std::span<const T>> blocks;
    for_each_layer(net, [&](const Conv2DLayer<T>& l) {
        blocks.emplace_back(l.weights.data);
        blocks.emplace_back(l.bias);
    });
    return blocks;
}

/// Input radius (in voxels) that can influence one output voxel: the sum of
/// (k-1)/2 over all banks on the deepest path.
inline int receptive_radius(const NetworkConfig& config) {
    int r = 0;
    for (const FilterBank& b : config.contrast_pathway.banks) r += (b.kernel - 1) / 2;
    for (const FilterBank& b : config.fusion_pathway.banks) r += (b.kernel - 1) / 2;
    r += (config.head_kernel - 1) / 2;
    return r;
}

/// Gradient container: a network-shaped set of buffers with all values zero.
template <typename T>
Network<T> zero_like(const Network<T>& net) {
    Network<T> g;
    g.config = net.config;
    g.contrast_pathways.resize(net.contrast_pathways.size());
    for (std::size_t p = 0; p < net.contrast_pathways.size(); ++p)
        for (const auto& l : net.contrast_pathways[p]) {
            auto z = make_conv_layer<T>(l.out_channels(), l.in_channels(), l.kernel());
            g.contrast_pathways[p].push_back(std::move(z));
        }
    for (const auto& l : net.fusion_pathway)
        g.fusion_pathway.push_back(make_conv_layer<T>(l.out_channels(), l.in_channels(), l.kernel()));
    g.head = make_conv_layer<T>(net.head.out_channels(), net.head.in_channels(), net.head.kernel());
    return g;
}

template <typename T>
struct ForwardCache {
    // pre-activation (conv output) and post-ReLU activation per bank
    std::vector<std::vector<Tensor4<T>>> contrast_pre, contrast_act;
    Tensor4<T> concat;
    std::vector<Tensor4<T>> fusion_pre, fusion_act;
    Tensor4<T> head_pre;
};

namespace detail {

template <typename T>
Tensor4<T> concat_channels(const std::vector<Tensor4<T>>& parts) {
    int c_total = 0;
    for (const auto& p : parts) c_total += p.c;
    Tensor4<T> out(parts[0].n, c_total, parts[0].h, parts[0].w);
    int c_off = 0;
    for (const auto& p : parts) {
        for (int in = 0; in < p.n; ++in)
            for (int ic = 0; ic < p.c; ++ic) {
                const T* src = p.plane(in, ic);
                T* dst = out.plane(in, c_off + ic);
                std::copy(src, src + static_cast<std::size_t>(p.h) * p.w, dst);
            }
        c_off += p.c;
    }
    return out;
}

}  // namespace detail

/// Forward pass over one batch (one Tensor4 per contrast, each with c = 1 and
/// identical dims). Returns the raw head activation (n, 1, h, w) -- ReLU'd but
/// not clamped. When `cache` is given, everything needed for an exact
/// backward pass is stored in it.
template <typename T>
Tensor4<T> forward_training(const Network<T>& net, const std::vector<Tensor4<T>>& inputs,
                            ForwardCache<T>* cache = nullptr) {
    require(inputs.size() == net.contrast_pathways.size(),
            "forward: one input batch per contrast expected");
    for (const auto& in : inputs)
        require(in.same_dims(inputs[0]) && in.c == 1, "forward: contrast batch dims mismatch");

    if (!cache) {
        // inference path: keep only the live tensor of each stage
        std::vector<Tensor4<T>> pathway_out;
        for (std::size_t p = 0; p < inputs.size(); ++p) {
            Tensor4<T> x = inputs[p];
            for (const auto& layer : net.contrast_pathways[p]) x = relu(conv2d_forward(x, layer));
            pathway_out.push_back(std::move(x));
        }
        Tensor4<T> x = detail::concat_channels(pathway_out);
        pathway_out.clear();
        for (const auto& layer : net.fusion_pathway) x = relu(conv2d_forward(x, layer));
        return relu(conv2d_forward(x, net.head));
    }

    ForwardCache<T>& cc = *cache;
    cc.contrast_pre.assign(inputs.size(), {});
    cc.contrast_act.assign(inputs.size(), {});
    cc.fusion_pre.clear();
    cc.fusion_act.clear();

    std::vector<Tensor4<T>> pathway_out;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
        const Tensor4<T>* x = &inputs[p];
        for (const auto& layer : net.contrast_pathways[p]) {
            Tensor4<T> pre = conv2d_forward(*x, layer);
            Tensor4<T> act = relu(pre);
            cc.contrast_pre[p].push_back(std::move(pre));
            cc.contrast_act[p].push_back(std::move(act));
            x = &cc.contrast_act[p].back();
        }
        pathway_out.push_back(cc.contrast_act[p].back());
    }

    cc.concat = detail::concat_channels(pathway_out);
    const Tensor4<T>* x = &cc.concat;
    for (const auto& layer : net.fusion_pathway) {
        Tensor4<T> pre = conv2d_forward(*x, layer);
        Tensor4<T> act = relu(pre);
        cc.fusion_pre.push_back(std::move(pre));
        cc.fusion_act.push_back(std::move(act));
        x = &cc.fusion_act.back();
    }

    cc.head_pre = conv2d_forward(*x, net.head);
    return relu(cc.head_pre);
}

/// Exact gradients of sum(output * upstream) for every layer, given the cache
/// produced by forward_training on the same inputs.
template <typename T>
Network<T> backward_training(const Network<T>& net, const std::vector<Tensor4<T>>& inputs,
                             const ForwardCache<T>& cache, const Tensor4<T>& upstream) {
    Network<T> grads = zero_like(net);

    Tensor4<T> d = relu_backward(cache.head_pre, upstream);
    const Tensor4<T>& head_in =
        net.fusion_pathway.empty() ? cache.concat : cache.fusion_act.back();
    Conv2DGrads<T> hg = conv2d_backward(head_in, net.head, d);
    grads.head.weights = std::move(hg.weights);
    grads.head.bias = std::move(hg.bias);
    d = std::move(hg.input);

    for (int i = static_cast<int>(net.fusion_pathway.size()) - 1; i >= 0; --i) {
        d = relu_backward(cache.fusion_pre[static_cast<std::size_t>(i)], d);
        const Tensor4<T>& in =
            (i == 0) ? cache.concat : cache.fusion_act[static_cast<std::size_t>(i - 1)];
        Conv2DGrads<T> g = conv2d_backward(in, net.fusion_pathway[static_cast<std::size_t>(i)], d);
        grads.fusion_pathway[static_cast<std::size_t>(i)].weights = std::move(g.weights);
        grads.fusion_pathway[static_cast<std::size_t>(i)].bias = std::move(g.bias);
        d = std::move(g.input);
    }

    // split the concat gradient back into per-contrast channel groups
    int c_off = 0;
    for (std::size_t p = 0; p < net.contrast_pathways.size(); ++p) {
        const auto& pathway = net.contrast_pathways[p];
        const Tensor4<T>& out_act = cache.contrast_act[p].back();
        Tensor4<T> dp(d.n, out_act.c, d.h, d.w);
        for (int in = 0; in < d.n; ++in)
            for (int ic = 0; ic < out_act.c; ++ic) {
                const T* src = d.plane(in, c_off + ic);
                std::copy(src, src + static_cast<std::size_t>(d.h) * d.w, dp.plane(in, ic));
            }
        c_off += out_act.c;

        for (int i = static_cast<int>(pathway.size()) - 1; i >= 0; --i) {
            dp = relu_backward(cache.contrast_pre[p][static_cast<std::size_t>(i)], dp);
            const Tensor4<T>& in =
                (i == 0) ? inputs[p] : cache.contrast_act[p][static_cast<std::size_t>(i - 1)];
            Conv2DGrads<T> g = conv2d_backward(in, pathway[static_cast<std::size_t>(i)], dp);
            grads.contrast_pathways[p][static_cast<std::size_t>(i)].weights = std::move(g.weights);
            grads.contrast_pathways[p][static_cast<std::size_t>(i)].bias = std::move(g.bias);
            dp = std::move(g.input);
        }
    }
    return grads;
}

/// Whole-slice membership prediction: identical math to forward_training on a
/// batch of one, then clamped to [0, 1] for inference. Output spatial dims
/// equal the input dims for any slice size.
template <typename T>
Tensor4<T> forward_slice(const Network<T>& net, const std::vector<Tensor4<T>>& slices) {
    for (const auto& s : slices) require(s.n == 1 && s.c == 1, "forward_slice: 2D fields expected");
    Tensor4<T> out = forward_training(net, slices);
    for (T& v : out.data) v = v > T(1) ? T(1) : v;  // ReLU already enforced >= 0
    return out;
}

}  // namespace flexconn
