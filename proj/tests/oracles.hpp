// Test-only reference implementations, deliberately independent of the
// library's code paths: direct-summation convolution, flood-fill component
// labeling with naive metric counting, and brute-force Wilcoxon enumeration.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <set>
#include <vector>

#include "flexconn/conv.hpp"
#include "flexconn/rng.hpp"
#include "flexconn/tensor.hpp"
#include "flexconn/volume.hpp"

namespace oracle {

// six nested loops, straight from the definition
template <typename T>
flexconn::Tensor4<T> naive_conv2d(const flexconn::Tensor4<T>& input,
                                  const flexconn::Conv2DLayer<T>& layer) {
    const int k = layer.kernel(), pad = layer.pad;
    flexconn::Tensor4<T> out(input.n, layer.out_channels(), input.h, input.w);
    for (int n = 0; n < input.n; ++n)
        for (int oc = 0; oc < layer.out_channels(); ++oc)
            for (int y = 0; y < input.h; ++y)
                for (int x = 0; x < input.w; ++x) {
                    double acc = static_cast<double>(layer.bias[static_cast<std::size_t>(oc)]);
                    for (int ic = 0; ic < input.c; ++ic)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = y + ky - pad, ix = x + kx - pad;
                                if (iy < 0 || ix < 0 || iy >= input.h || ix >= input.w) continue;
                                acc += static_cast<double>(input.at(n, ic, iy, ix)) *
                                       static_cast<double>(layer.weights.at(oc, ic, ky, kx));
                            }
                    out.at(n, oc, y, x) = static_cast<T>(acc);
                }
    return out;
}

// central finite difference of a scalar objective w.r.t. one coordinate
inline double central_difference(double& coord, const std::function<double()>& objective,
                                 double step = 1e-5) {
    const double keep = coord;
    coord = keep + step;
    const double hi = objective();
    coord = keep - step;
    const double lo = objective();
    coord = keep;
    return (hi - lo) / (2.0 * step);
}

inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// 18-neighborhood offsets by the rule: at most two nonzero coordinates
inline std::vector<std::array<int, 3>> offsets18() {
    std::vector<std::array<int, 3>> off;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nz = (dx != 0) + (dy != 0) + (dz != 0);
                if (nz >= 1 && nz <= 2) off.push_back({dx, dy, dz});
            }
    return off;
}

// repeated flood fill from every unvisited foreground voxel
inline std::vector<std::vector<std::size_t>> flood_components(const flexconn::Volume& seg) {
    const auto off = offsets18();
    std::vector<char> seen(seg.size(), 0);
    std::vector<std::vector<std::size_t>> comps;
    for (int z = 0; z < seg.nz; ++z)
        for (int y = 0; y < seg.ny; ++y)
            for (int x = 0; x < seg.nx; ++x) {
                const std::size_t i = seg.index(x, y, z);
                if (seg.data[i] == 0.0f || seen[i]) continue;
                comps.emplace_back();
                std::deque<std::array<int, 3>> queue{{x, y, z}};
                seen[i] = 1;
                while (!queue.empty()) {
                    const auto [cx, cy, cz] = queue.front();
                    queue.pop_front();
                    comps.back().push_back(seg.index(cx, cy, cz));
                    for (const auto& d : off) {
                        const int nx2 = cx + d[0], ny2 = cy + d[1], nz2 = cz + d[2];
                        if (nx2 < 0 || ny2 < 0 || nz2 < 0 || nx2 >= seg.nx || ny2 >= seg.ny ||
                            nz2 >= seg.nz)
                            continue;
                        const std::size_t j = seg.index(nx2, ny2, nz2);
                        if (seg.data[j] == 0.0f || seen[j]) continue;
                        seen[j] = 1;
                        queue.push_back({nx2, ny2, nz2});
                    }
                }
            }
    return comps;
}

struct NaiveMetrics {
    double dice, lfpr, ltpr, ppv;
    double vd;
    bool vd_defined;
    std::size_t auto_components, manual_components;
};

inline NaiveMetrics naive_metrics(const flexconn::Volume& a, const flexconn::Volume& m) {
    NaiveMetrics r{};
    long long na = 0, nm = 0, ov = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool ia = a.data[i] != 0.0f, im = m.data[i] != 0.0f;
        na += ia;
        nm += im;
        ov += ia && im;
    }
    r.dice = (na + nm == 0) ? 1.0 : 2.0 * static_cast<double>(ov) / static_cast<double>(na + nm);
    r.ppv = na == 0 ? (nm == 0 ? 1.0 : 0.0) : static_cast<double>(ov) / static_cast<double>(na);
    r.vd_defined = nm > 0;
    r.vd = r.vd_defined ? std::abs(static_cast<double>(na - nm)) / static_cast<double>(nm) : 0.0;

    const auto ca = flood_components(a);
    const auto cm = flood_components(m);
    r.auto_components = ca.size();
    r.manual_components = cm.size();

    auto touches = [](const std::vector<std::size_t>& comp, const flexconn::Volume& other) {
        for (std::size_t i : comp)
            if (other.data[i] != 0.0f) return true;
        return false;
    };
    std::size_t fp = 0;
    for (const auto& comp : ca) fp += !touches(comp, m);
    r.lfpr = ca.empty() ? 0.0 : static_cast<double>(fp) / static_cast<double>(ca.size());
    std::size_t tp = 0;
    for (const auto& comp : cm) tp += touches(comp, a);
    r.ltpr = cm.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(cm.size());
    return r;
}

struct WilcoxonOracle {
    double w_plus, w_minus, p;
};

// full 2^n enumeration of the signed-rank null; p is the documented
// two-sided definition: P(W+ <= min(obs)) + P(W+ >= max(obs)), capped at 1
inline WilcoxonOracle wilcoxon_enumerate(const std::vector<double>& x,
                                         const std::vector<double>& y) {
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != y[i]) d.push_back(x[i] - y[i]);
    const std::size_t n = d.size();

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        for (std::size_t k2 = i; k2 <= j; ++k2)
            rank[order[k2]] = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        i = j + 1;
    }

    WilcoxonOracle res{0.0, 0.0, 0.0};
    for (std::size_t k2 = 0; k2 < n; ++k2) (d[k2] > 0 ? res.w_plus : res.w_minus) += rank[k2];

    const double lo = std::min(res.w_plus, res.w_minus), hi = std::max(res.w_plus, res.w_minus);
    std::size_t count = 0;
    const std::size_t total = static_cast<std::size_t>(1) << n;
    for (std::size_t mask = 0; mask < total; ++mask) {
        double wp = 0.0;
        for (std::size_t b = 0; b < n; ++b)
            if (mask & (static_cast<std::size_t>(1) << b)) wp += rank[b];
        if (wp <= lo + 1e-12 || wp >= hi - 1e-12) ++count;
    }
    res.p = std::min(1.0, static_cast<double>(count) / static_cast<double>(total));
    return res;
}

// random binary volume with controllable foreground density
inline flexconn::Volume random_binary_volume(flexconn::Rng& rng, int nx, int ny, int nz,
                                             double density) {
    flexconn::Volume v(nx, ny, nz);
    for (float& f : v.data) f = rng.uniform() < density ? 1.0f : 0.0f;
    return v;
}

template <typename T>
flexconn::Tensor4<T> random_tensor(flexconn::Rng& rng, int n, int c, int h, int w, double lo = -1.0,
                                   double hi = 1.0) {
    flexconn::Tensor4<T> t(n, c, h, w);
    for (T& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

}  // namespace oracle
