#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "flexconn/tensor.hpp"
#include "flexconn/volume.hpp"

namespace flexconn {

/// Labeling of maximal 18-connected foreground components. 18-connectivity is
/// face (6) plus edge (12) neighbors; voxels touching only at a corner belong
/// to different components. Labels are dense 1..K in raster encounter order.
struct ComponentLabeling {
    int nx = 0, ny = 0, nz = 0;
    std::vector<std::int32_t> labels;          // 0 = background
    std::vector<long long> voxel_counts;       // voxel_counts[l-1] for label l

    int num_components() const { return static_cast<int>(voxel_counts.size()); }
};

namespace detail {

struct UnionFind {
    std::vector<std::int32_t> parent;

    std::int32_t add() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return static_cast<std::int32_t>(parent.size() - 1);
    }
    std::int32_t root(std::int32_t i) {
        while (parent[static_cast<std::size_t>(i)] != i) {
            parent[static_cast<std::size_t>(i)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
            i = parent[static_cast<std::size_t>(i)];
        }
        return i;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = root(a);
        b = root(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace detail

/// Two-pass union-find labeling over the 9 already-visited 18-neighbors in
/// raster order (x fastest, then y, then z).
inline ComponentLabeling connected_components_18(const Volume& seg) {
    require(seg.is_binary(), "connected_components_18: input must be binary (0/1)");

    // prior half of the 18-neighborhood as (dx, dy, dz)
    static constexpr int kPrior[9][3] = {
        {0, 0, -1}, {-1, 0, -1}, {1, 0, -1}, {0, -1, -1}, {0, 1, -1},
        {0, -1, 0}, {-1, -1, 0}, {1, -1, 0}, {-1, 0, 0},
    };

    ComponentLabeling out;
    out.nx = seg.nx;
    out.ny = seg.ny;
    out.nz = seg.nz;
    out.labels.assign(seg.size(), 0);

    std::vector<std::int32_t> provisional(seg.size(), -1);
    detail::UnionFind uf;

    for (int z = 0; z < seg.nz; ++z)
        for (int y = 0; y < seg.ny; ++y)
            for (int x = 0; x < seg.nx; ++x) {
                if (seg.at(x, y, z) == 0.0f) continue;
                const std::size_t i = seg.index(x, y, z);
                std::int32_t lab = -1;
                for (const auto& d : kPrior) {
                    const int xx = x + d[0], yy = y + d[1], zz = z + d[2];
                    if (xx < 0 || yy < 0 || zz < 0 || xx >= seg.nx || yy >= seg.ny) continue;
                    const std::size_t j = seg.index(xx, yy, zz);
                    if (provisional[j] < 0) continue;
                    if (lab < 0)
                        lab = provisional[j];
                    else
                        uf.unite(lab, provisional[j]);
                }
                provisional[i] = (lab < 0) ? uf.add() : lab;
            }

    std::vector<std::int32_t> dense(uf.parent.size(), 0);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (provisional[i] < 0) continue;
        const std::int32_t r = uf.root(provisional[i]);
        if (dense[static_cast<std::size_t>(r)] == 0) {
            dense[static_cast<std::size_t>(r)] = ++next;
            out.voxel_counts.push_back(0);
        }
        out.labels[i] = dense[static_cast<std::size_t>(r)];
        ++out.voxel_counts[static_cast<std::size_t>(out.labels[i] - 1)];
    }
    return out;
}

namespace detail {

inline void check_pair(const Volume& a, const Volume& m, const char* who) {
    require(a.same_dims(m), std::string(who) + ": volume dims mismatch");
    require(a.is_binary() && m.is_binary(), std::string(who) + ": volumes must be binary");
}

inline long long overlap_count(const Volume& a, const Volume& m) {
    long long n = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        n += (a.data[i] != 0.0f && m.data[i] != 0.0f);
    return n;
}

// how many labeled components contain at least one voxel that is foreground
// in `other` ("share at least one voxel")
inline long long overlapped_components(const ComponentLabeling& cc, const Volume& other) {
    std::vector<char> hit(static_cast<std::size_t>(cc.num_components()), 0);
    for (std::size_t i = 0; i < other.size(); ++i)
        if (cc.labels[i] > 0 && other.data[i] != 0.0f)
            hit[static_cast<std::size_t>(cc.labels[i] - 1)] = 1;
    long long n = 0;
    for (char h : hit) n += h;
    return n;
}

}  // namespace detail

/// Voxelwise overlap 2|A n M| / (|A| + |M|); 1 when both volumes are empty.
inline double dice(const Volume& auto_seg, const Volume& manual_seg) {
    detail::check_pair(auto_seg, manual_seg, "dice");
    const long long na = auto_seg.count_nonzero(), nm = manual_seg.count_nonzero();
    if (na + nm == 0) return 1.0;
    return 2.0 * static_cast<double>(detail::overlap_count(auto_seg, manual_seg)) /
           static_cast<double>(na + nm);
}

/// Fraction of automated 18-connected components that touch no manual voxel.
/// Empty automated segmentation -> 0 by convention.
inline double lfpr(const Volume& auto_seg, const Volume& manual_seg) {
    detail::check_pair(auto_seg, manual_seg, "lfpr");
    const ComponentLabeling cc = connected_components_18(auto_seg);
    if (cc.num_components() == 0) return 0.0;
    const long long hit = detail::overlapped_components(cc, manual_seg);
    return static_cast<double>(cc.num_components() - hit) /
           static_cast<double>(cc.num_components());
}

/// Fraction of manual components touched by the automated segmentation.
/// Empty manual segmentation -> 1 by convention.
inline double ltpr(const Volume& auto_seg, const Volume& manual_seg) {
    detail::check_pair(auto_seg, manual_seg, "ltpr");
    const ComponentLabeling cc = connected_components_18(manual_seg);
    if (cc.num_components() == 0) return 1.0;
    return static_cast<double>(detail::overlapped_components(cc, auto_seg)) /
           static_cast<double>(cc.num_components());
}

/// |A n M| / |A|. Empty automated segmentation: 1 if manual is also empty,
/// else 0.
inline double ppv(const Volume& auto_seg, const Volume& manual_seg) {
    detail::check_pair(auto_seg, manual_seg, "ppv");
    const long long na = auto_seg.count_nonzero();
    if (na == 0) return manual_seg.count_nonzero() == 0 ? 1.0 : 0.0;
    return static_cast<double>(detail::overlap_count(auto_seg, manual_seg)) /
           static_cast<double>(na);
}

/// abs(|A| - |M|) / |M|; undefined (error) for an empty reference.
inline double volume_difference(const Volume& auto_seg, const Volume& manual_seg) {
    detail::check_pair(auto_seg, manual_seg, "volume_difference");
    const long long nm = manual_seg.count_nonzero();
    if (nm == 0) throw std::runtime_error("volume_difference: VD undefined for empty reference");
    return std::abs(static_cast<double>(auto_seg.count_nonzero() - nm)) / static_cast<double>(nm);
}

struct MetricsReport {
    double dice = 0.0, lfpr = 0.0, ltpr = 0.0, ppv = 0.0, vd = 0.0;
    long long auto_components = 0, manual_components = 0;
    long long auto_voxels = 0, manual_voxels = 0;
    double score = 0.0;
};

/// Challenge-score weights, defaulting to the public lesion-challenge
/// weighting (dice/8 + ppv/8 + (1-lfpr)/4 + ltpr/4 + volume-correlation/4).
/// Reconstructed, so they are configuration rather than a fixed contract.
struct ScoreWeights {
    double dice = 0.125;
    double ppv = 0.125;
    double one_minus_lfpr = 0.25;
    double ltpr = 0.25;
    double volume_correlation = 0.25;

    double sum() const { return dice + ppv + one_minus_lfpr + ltpr + volume_correlation; }
};

/// Weighted average of the metrics scaled to [0, 100]; LFPR enters as
/// (1 - lfpr). Volume correlation is a cohort quantity: when absent, its
/// weight is renormalized away; when present it is clamped to [0, 1].
inline double challenge_score(const MetricsReport& r, const ScoreWeights& w = {},
                              std::optional<double> volume_correlation = std::nullopt) {
    if (std::abs(w.sum() - 1.0) > 1e-9)
        throw std::runtime_error("challenge_score: weights must sum to 1");
    double acc = w.dice * r.dice + w.ppv * r.ppv + w.one_minus_lfpr * (1.0 - r.lfpr) +
                 w.ltpr * r.ltpr;
    double norm = 1.0;
    if (volume_correlation.has_value()) {
        acc += w.volume_correlation * std::clamp(*volume_correlation, 0.0, 1.0);
    } else {
        norm = 1.0 - w.volume_correlation;
        if (norm <= 0.0)
            throw std::runtime_error("challenge_score: no metric weight left without correlation");
    }
    return 100.0 * acc / norm;
}

/// All pairwise metrics for one (automated, manual) volume pair. The per-case
/// score renormalizes the volume-correlation weight away.
inline MetricsReport evaluate_pair(const Volume& auto_seg, const Volume& manual_seg,
                                   const ScoreWeights& weights = {}) {
    MetricsReport r;
    r.dice = dice(auto_seg, manual_seg);
    r.lfpr = lfpr(auto_seg, manual_seg);
    r.ltpr = ltpr(auto_seg, manual_seg);
    r.ppv = ppv(auto_seg, manual_seg);
    r.vd = volume_difference(auto_seg, manual_seg);
    r.auto_components = connected_components_18(auto_seg).num_components();
    r.manual_components = connected_components_18(manual_seg).num_components();
    r.auto_voxels = auto_seg.count_nonzero();
    r.manual_voxels = manual_seg.count_nonzero();
    r.score = challenge_score(r, weights);
    return r;
}

struct WilcoxonResult {
    double w_statistic = 0.0;  // min(W+, W-)
    double p_value = 1.0;      // two-sided
    int n_effective = 0;
};

namespace detail {

// ranks of |d| ascending, average ranks for ties; returns (ranks, tie sizes)
inline std::pair<std::vector<double>, std::vector<long long>> rank_abs(
    const std::vector<double>& d) {
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(d[a]) < std::abs(d[b]);
    });
    std::vector<double> ranks(n, 0.0);
    std::vector<long long> ties;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        ties.push_back(static_cast<long long>(j - i + 1));
        i = j + 1;
    }
    return {ranks, ties};
}

// exact null distribution of 2*W+ by subset-sum counting over doubled ranks
inline double exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
    const std::size_t n = ranks.size();
    long long total2 = 0;
    std::vector<long long> doubled(n);
    for (std::size_t i = 0; i < n; ++i) {
        doubled[i] = std::llround(2.0 * ranks[i]);
        total2 += doubled[i];
    }
    std::vector<std::uint64_t> dp(static_cast<std::size_t>(total2) + 1, 0);
    dp[0] = 1;
    for (std::size_t i = 0; i < n; ++i)
        for (long long s = total2; s >= doubled[i]; --s)
            dp[static_cast<std::size_t>(s)] += dp[static_cast<std::size_t>(s - doubled[i])];

    const long long wp2 = std::llround(2.0 * w_plus);
    const long long wm2 = total2 - wp2;
    const long long lo = std::min(wp2, wm2), hi = std::max(wp2, wm2);
    std::uint64_t count = 0;
    for (long long s = 0; s <= lo; ++s) count += dp[static_cast<std::size_t>(s)];
    for (long long s = hi; s <= total2; ++s) count += dp[static_cast<std::size_t>(s)];
    const double p = static_cast<double>(count) / std::ldexp(1.0, static_cast<int>(n));
    return std::min(1.0, p);
}

}  // namespace detail

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped;
/// ties in |difference| get average ranks. Exact p by full null enumeration
/// for n_effective <= 12, else normal approximation with tie correction (no
/// continuity correction).
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                           const std::vector<double>& y) {
    require(x.size() == y.size(), "wilcoxon_signed_rank: paired samples must have equal length");
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double di = x[i] - y[i];
        if (di != 0.0) d.push_back(di);
    }
    if (d.empty())
        throw std::runtime_error("wilcoxon_signed_rank: degenerate paired sample (all differences zero)");
    if (d.size() < 5)
        throw std::runtime_error("wilcoxon_signed_rank: fewer than 5 nonzero differences");

    const auto [ranks, ties] = detail::rank_abs(d);
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
        (d[i] > 0.0 ? w_plus : w_minus) += ranks[i];

    WilcoxonResult res;
    res.n_effective = static_cast<int>(d.size());
    res.w_statistic = std::min(w_plus, w_minus);

    if (d.size() <= 12) {
        res.p_value = detail::exact_two_sided_p(ranks, w_plus);
        return res;
    }

    const double n = static_cast<double>(d.size());
    const double mu = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    for (long long t : ties) var -= static_cast<double>(t * t * t - t) / 48.0;
    if (var <= 0.0)
        throw std::runtime_error("wilcoxon_signed_rank: zero variance under ties");
    const double z = (w_plus - mu) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    return res;
}

/// Pearson correlation; errors on fewer than 2 points or zero variance.
inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "pearson_correlation: length mismatch");
    if (x.size() < 2) throw std::runtime_error("pearson_correlation: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::runtime_error("pearson_correlation: zero variance sample");
    return sxy / std::sqrt(sxx * syy);
}

struct RobustFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Theil-Sen estimator: median pairwise slope, median residual intercept.
inline RobustFit theil_sen(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "theil_sen: length mismatch");
    std::vector<double> slopes;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if (x[i] != x[j]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    if (slopes.empty())
        throw std::runtime_error("theil_sen: no pair with distinct x values");

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    RobustFit fit;
    fit.slope = median(slopes);
    std::vector<double> resid(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) resid[i] = y[i] - fit.slope * x[i];
    fit.intercept = median(resid);
    return fit;
}

}  // namespace flexconn
