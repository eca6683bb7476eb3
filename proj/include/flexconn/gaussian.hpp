#pragma once

#include <cmath>
#include <vector>

#include "flexconn/tensor.hpp"

namespace flexconn {

/// Truncated, renormalized 1D Gaussian: weights proportional to
/// exp(-x^2 / (2 sigma^2)) for x in {-(size-1)/2 .. (size-1)/2}, sum 1.
/// The separable outer product gives the 2D smoothing kernel used for
/// membership targets. As sigma -> 0+ the off-center weights underflow and
/// the kernel degenerates to a delta, e.g. [0, 1, 0] at size 3.
inline std::vector<double> gaussian_kernel_1d(double sigma, int size = 3) {
    require(sigma > 0.0, "gaussian_kernel_1d: sigma must be positive");
    require(size > 0 && size % 2 == 1, "gaussian_kernel_1d: size must be odd and positive");

    const int r = (size - 1) / 2;
    std::vector<double> w(static_cast<std::size_t>(size));
    double sum = 0.0;
    for (int x = -r; x <= r; ++x) {
        const double v = std::exp(-(static_cast<double>(x) * x) / (2.0 * sigma * sigma));
        w[static_cast<std::size_t>(x + r)] = v;
        sum += v;
    }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace flexconn
