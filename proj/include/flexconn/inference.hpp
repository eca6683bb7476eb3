#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "flexconn/metrics.hpp"
#include "flexconn/network.hpp"
#include "flexconn/volume.hpp"

namespace flexconn {

/// Threshold default 0.30: the published sweep's highest median Dice, and
/// just below the smoothed target's straight-edge value (~0.3078).
struct InferenceConfig {
    double threshold = 0.30;
    const Volume* wm_mask = nullptr;  // optional white-matter post filter

    void validate() const {
        require(threshold > 0.0 && threshold < 1.0, "threshold must be in (0,1)");
    }
};

struct NormalizeResult {
    Volume volume;
    double scale = 1.0;  // divisor applied (99th-percentile by default)
};

/// Scale by the chosen percentile of the nonzero intensities and clamp to
/// [0, clamp_max]. The same transform must be applied before patch extraction
/// (training) and before prediction (inference).
inline NormalizeResult normalize_intensity(const Volume& vol, double percentile = 0.99,
                                           double clamp_max = 1.5) {
    require(percentile > 0.0 && percentile <= 1.0, "normalize: percentile must be in (0,1]");
    require(clamp_max > 0.0, "normalize: clamp_max must be positive");
    std::vector<float> nz;
    nz.reserve(vol.size());
    for (float v : vol.data)
        if (v != 0.0f) nz.push_back(v);

    NormalizeResult r;
    r.volume = vol;
    if (nz.empty()) return r;  // all-zero volume: nothing to scale

    const std::size_t k = static_cast<std::size_t>(
        std::min<long long>(static_cast<long long>(nz.size()) - 1,
                            std::llround(std::ceil(percentile * static_cast<double>(nz.size()))) - 1));
    std::nth_element(nz.begin(), nz.begin() + static_cast<std::ptrdiff_t>(k), nz.end());
    const double p = static_cast<double>(nz[k]);
    if (p <= 0.0) return r;

    r.scale = p;
    for (float& v : r.volume.data)
        v = static_cast<float>(std::clamp(static_cast<double>(v) / p, 0.0, clamp_max));
    return r;
}

/// Whole-volume membership: each axial slice predicted independently by the
/// fully convolutional forward pass; output dims equal input dims and values
/// lie in [0, 1]. Inputs must already be intensity normalized.
inline Volume predict_membership(const Network<float>& net, const std::vector<Volume>& contrasts) {
    require(!contrasts.empty(), "predict_membership: at least one contrast required");
    require(contrasts.size() == net.contrast_pathways.size(),
            "predict_membership: contrast count does not match the network");
    for (const Volume& v : contrasts)
        require(v.same_dims(contrasts[0]), "predict_membership: contrast dims mismatch");

    const Volume& ref = contrasts[0];
    Volume out(ref.nx, ref.ny, ref.nz, ref.sx, ref.sy, ref.sz);
    out.source_header = ref.source_header;

    std::vector<Tensor4<float>> slices(contrasts.size());
    for (int z = 0; z < ref.nz; ++z) {
        for (std::size_t c = 0; c < contrasts.size(); ++c)
            slices[c] = axial_slice<float>(contrasts[c], z);
        set_axial_slice(out, z, forward_slice(net, slices));
    }
    return out;
}

/// Voxelwise mean of two memberships (the two-rater averaging step).
inline Volume average_memberships(const Volume& m1, const Volume& m2) {
    require(m1.same_dims(m2), "average_memberships: dims mismatch");
    Volume out = m1;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = 0.5f * (m1.data[i] + m2.data[i]);
    return out;
}

/// Binary segmentation: voxel is lesion iff membership >= threshold and, when
/// a WM mask is supplied, the mask is nonzero there.
inline Volume threshold_membership(const Volume& m, const InferenceConfig& cfg) {
    cfg.validate();
    if (cfg.wm_mask != nullptr)
        require(cfg.wm_mask->same_dims(m), "threshold_membership: WM mask dims mismatch");
    Volume out(m.nx, m.ny, m.nz, m.sx, m.sy, m.sz);
    out.source_header = m.source_header;
    const float tau = static_cast<float>(cfg.threshold);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const bool in = m.data[i] >= tau &&
                        (cfg.wm_mask == nullptr || cfg.wm_mask->data[i] != 0.0f);
        out.data[i] = in ? 1.0f : 0.0f;
    }
    return out;
}

/// Dice at thresholds 0.05, 0.10, ..., 0.85 (17 rows) against a truth mask.
inline std::vector<std::pair<double, double>> sweep_threshold(const Volume& membership,
                                                              const Volume& truth) {
    require(membership.same_dims(truth), "sweep_threshold: dims mismatch");
    std::vector<std::pair<double, double>> rows;
    for (int i = 1; i <= 17; ++i) {
        InferenceConfig cfg;
        cfg.threshold = 0.05 * i;
        const Volume seg = threshold_membership(membership, cfg);
        rows.emplace_back(cfg.threshold, dice(seg, truth));
    }
    return rows;
}

}  // namespace flexconn
