#pragma once

#include <algorithm>
#include <cstddef>

#include "flexconn/tensor.hpp"

namespace flexconn {

/// One filter bank: weights (c_out, c_in, k, k), bias per filter, zero padding
/// of (k-1)/2 per side so spatial dims are preserved.
template <typename T>
struct Conv2DLayer {
    Tensor4<T> weights;
    std::vector<T> bias;
    int pad = 0;

    int out_channels() const { return weights.n; }
    int in_channels() const { return weights.c; }
    int kernel() const { return weights.h; }

    void validate() const {
        require(weights.h == weights.w, "conv kernel must be square");
        require(weights.h % 2 == 1, "conv kernel size must be odd");
        require(pad == (weights.h - 1) / 2, "conv pad must equal (k-1)/2");
        require(static_cast<int>(bias.size()) == weights.n,
                "conv bias length must equal filter count");
    }
};

template <typename T>
Conv2DLayer<T> make_conv_layer(int c_out, int c_in, int k) {
    Conv2DLayer<T> layer;
    layer.weights = Tensor4<T>(c_out, c_in, k, k);
    layer.bias.assign(static_cast<std::size_t>(c_out), T(0));
    layer.pad = (k - 1) / 2;
    return layer;
}

template <typename T>
long long layer_weight_count(const Conv2DLayer<T>& layer) {
    return static_cast<long long>(layer.kernel()) * layer.kernel() *
           layer.in_channels() * layer.out_channels();
}

/// Shape-preserving 2D convolution (correlation with the stored weights),
/// out-of-range input treated as zero. Accumulation order per output element
/// is fixed (channel, then kernel row, then kernel column).
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& input, const Conv2DLayer<T>& layer) {
    layer.validate();
    require(input.c == layer.in_channels(), "conv2d_forward: input channel count mismatch");

    const int k = layer.kernel(), pad = layer.pad;
    const int h = input.h, w = input.w;
    Tensor4<T> out(input.n, layer.out_channels(), h, w);

    for (int in = 0; in < input.n; ++in) {
        for (int oc = 0; oc < layer.out_channels(); ++oc) {
            T* op = out.plane(in, oc);
            const T b = layer.bias[static_cast<std::size_t>(oc)];
            std::fill(op, op + static_cast<std::size_t>(h) * w, b);
            for (int ic = 0; ic < input.c; ++ic) {
                const T* ip = input.plane(in, ic);
                const T* wp = layer.weights.plane(oc, ic);
                for (int ky = 0; ky < k; ++ky) {
                    const int dy = ky - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    for (int kx = 0; kx < k; ++kx) {
                        const T wv = wp[ky * k + kx];
                        const int dx = kx - pad;
                        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                        for (int y = y0; y < y1; ++y) {
                            T* orow = op + static_cast<std::size_t>(y) * w;
                            const T* irow = ip + static_cast<std::size_t>(y + dy) * w + dx;
                            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
struct Conv2DGrads {
    Tensor4<T> input;
    Tensor4<T> weights;
    std::vector<T> bias;
};

/// Exact analytic gradients of sum(output * upstream) w.r.t. input, weights
/// and bias. The weight-gradient inner product uses four fixed partial sums,
/// so results are reproducible for a given build.
template <typename T>
Conv2DGrads<T> conv2d_backward(const Tensor4<T>& input, const Conv2DLayer<T>& layer,
                               const Tensor4<T>& upstream) {
    layer.validate();
    require(input.c == layer.in_channels(), "conv2d_backward: input channel count mismatch");
    require(upstream.n == input.n && upstream.c == layer.out_channels() &&
                upstream.h == input.h && upstream.w == input.w,
            "conv2d_backward: upstream gradient dims mismatch");

    const int k = layer.kernel(), pad = layer.pad;
    const int h = input.h, w = input.w;

    Conv2DGrads<T> g;
    g.input = zeros_like(input);
    g.weights = zeros_like(layer.weights);
    g.bias.assign(layer.bias.size(), T(0));

    for (int in = 0; in < input.n; ++in) {
        for (int oc = 0; oc < layer.out_channels(); ++oc) {
            const T* up = upstream.plane(in, oc);

            T bsum = T(0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) bsum += up[i];
            g.bias[static_cast<std::size_t>(oc)] += bsum;

            for (int ic = 0; ic < input.c; ++ic) {
                const T* ip = input.plane(in, ic);
                T* gip = g.input.plane(in, ic);
                const T* wp = layer.weights.plane(oc, ic);
                T* gwp = g.weights.plane(oc, ic);
                for (int ky = 0; ky < k; ++ky) {
                    const int dy = ky - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    for (int kx = 0; kx < k; ++kx) {
                        const int dx = kx - pad;
                        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                        const T wv = wp[ky * k + kx];
                        T s0 = T(0), s1 = T(0), s2 = T(0), s3 = T(0);
                        for (int y = y0; y < y1; ++y) {
                            const T* uprow = up + static_cast<std::size_t>(y) * w;
                            const T* irow = ip + static_cast<std::size_t>(y + dy) * w + dx;
                            T* girow = gip + static_cast<std::size_t>(y + dy) * w + dx;
                            for (int x = x0; x < x1; ++x) girow[x] += wv * uprow[x];
                            int x = x0;
                            for (; x + 3 < x1; x += 4) {
                                s0 += irow[x] * uprow[x];
                                s1 += irow[x + 1] * uprow[x + 1];
                                s2 += irow[x + 2] * uprow[x + 2];
                                s3 += irow[x + 3] * uprow[x + 3];
                            }
                            for (; x < x1; ++x) s0 += irow[x] * uprow[x];
                        }
                        gwp[ky * k + kx] += (s0 + s1) + (s2 + s3);
                    }
                }
            }
        }
    }
    return g;
}

template <typename T>
Tensor4<T> relu(const Tensor4<T>& input) {
    Tensor4<T> out = input;
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    return out;
}

/// upstream where the forward input was strictly positive, else zero
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& input, const Tensor4<T>& upstream) {
    require(input.same_dims(upstream), "relu_backward: dims mismatch");
    Tensor4<T> out = zeros_like(input);
    for (std::size_t i = 0; i < input.size(); ++i)
        out.data[i] = input.data[i] > T(0) ? upstream.data[i] : T(0);
    return out;
}

template <typename T>
struct MseResult {
    double loss = 0.0;
    Tensor4<T> grad;
};

/// Mean squared error over all elements; grad is 2*(pred-target)/count.
template <typename T>
MseResult<T> mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
    require(pred.same_dims(target), "mse_loss: dims mismatch");
    MseResult<T> r;
    r.grad = zeros_like(pred);
    const double count = static_cast<double>(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
        acc += d * d;
        r.grad.data[i] = static_cast<T>(2.0 * d / count);
    }
    r.loss = acc / count;
    return r;
}

}  // namespace flexconn
