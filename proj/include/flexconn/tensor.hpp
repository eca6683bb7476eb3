#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexconn {

// Contract violations throw std::invalid_argument; data/format problems use
// std::runtime_error; numeric failures (divergence, non-finite gradients)
// throw NumericError so callers can map them to a distinct exit code.
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Batched multi-channel 2D buffer, contiguous row-major in (n, c, h, w) order.
/// Training and inference instantiate T = float; test oracles use T = double.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {
        require(n_ > 0 && c_ > 0 && h_ > 0 && w_ > 0, "Tensor4 dims must be positive");
    }

    std::size_t size() const { return data.size(); }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
    }
    T& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    const T& at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    // start of one (n, c) spatial plane
    T* plane(int in, int ic) { return data.data() + index(in, ic, 0, 0); }
    const T* plane(int in, int ic) const { return data.data() + index(in, ic, 0, 0); }

    bool same_dims(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

template <typename T>
Tensor4<T> zeros_like(const Tensor4<T>& t) {
    return Tensor4<T>(t.n, t.c, t.h, t.w);
}

}  // namespace flexconn
