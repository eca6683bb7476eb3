#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "flexconn/gaussian.hpp"
#include "flexconn/rng.hpp"
#include "flexconn/tensor.hpp"
#include "flexconn/volume.hpp"

namespace flexconn {

/// Smooth membership target from a hard binary mask: separable Gaussian
/// smoothing applied per axial slice (in-plane only) with zero boundaries.
/// At the default sigma 1.5 the straight-edge exterior value is ~0.3078,
/// which keeps the 0.30 threshold just inside the half-max ring.
inline Volume make_membership_target(const Volume& mask, double sigma = 1.5, int size = 3) {
    require(mask.is_binary(), "make_membership_target: mask must be binary (0/1)");
    const std::vector<double> k = gaussian_kernel_1d(sigma, size);
    const int r = (size - 1) / 2;

    Volume out(mask.nx, mask.ny, mask.nz, mask.sx, mask.sy, mask.sz);
    out.source_header = mask.source_header;
    std::vector<double> tmp(static_cast<std::size_t>(mask.nx) * mask.ny);

    for (int z = 0; z < mask.nz; ++z) {
        // horizontal pass into tmp, then vertical pass into out
        for (int y = 0; y < mask.ny; ++y)
            for (int x = 0; x < mask.nx; ++x) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) {
                    const int xx = x + t;
                    if (xx >= 0 && xx < mask.nx)
                        acc += k[static_cast<std::size_t>(t + r)] * mask.at(xx, y, z);
                }
                tmp[static_cast<std::size_t>(y) * mask.nx + x] = acc;
            }
        for (int y = 0; y < mask.ny; ++y)
            for (int x = 0; x < mask.nx; ++x) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) {
                    const int yy = y + t;
                    if (yy >= 0 && yy < mask.ny)
                        acc += k[static_cast<std::size_t>(t + r)] *
                               tmp[static_cast<std::size_t>(yy) * mask.nx + x];
                }
                if (acc < 0.0) acc = 0.0;
                if (acc > 1.0) acc = 1.0;
                out.at(x, y, z) = static_cast<float>(acc);
            }
    }
    return out;
}

/// Training patches: one per-contrast stack, the matching target stack, and
/// the source voxel of every patch. Stacks share (n, h, w); each patch is
/// centered on a lesion voxel of the source mask.
struct PatchSet {
    std::vector<Tensor4<float>> contrasts;
    Tensor4<float> targets;
    std::vector<std::array<int, 3>> coords;  // (x, y, z) patch centers

    int count() const { return targets.n; }
};

namespace detail {

inline void copy_patch(const Volume& vol, int cx, int cy, int z, Tensor4<float>& dst, int n) {
    const int rh = (dst.h - 1) / 2, rw = (dst.w - 1) / 2;
    for (int py = 0; py < dst.h; ++py) {
        const int y = cy + py - rh;
        for (int px = 0; px < dst.w; ++px) {
            const int x = cx + px - rw;
            const bool inside = x >= 0 && x < vol.nx && y >= 0 && y < vol.ny;
            dst.at(n, 0, py, px) = inside ? vol.at(x, y, z) : 0.0f;
        }
    }
}

}  // namespace detail

/// One patch per lesion voxel (stride 1), in raster order; no normal-tissue
/// patches. In-plane out-of-volume regions are zero filled.
inline PatchSet extract_patches(const std::vector<Volume>& contrasts, const Volume& mask,
                                int patch_h, int patch_w, const Volume& target) {
    require(!contrasts.empty(), "extract_patches: at least one contrast volume required");
    for (const Volume& v : contrasts)
        require(v.same_dims(mask), "extract_patches: contrast/mask dims mismatch");
    require(target.same_dims(mask), "extract_patches: target/mask dims mismatch");
    require(patch_h % 2 == 1 && patch_w % 2 == 1, "extract_patches: patch dims must be odd");
    require(mask.is_binary(), "extract_patches: mask must be binary (0/1)");

    std::vector<std::array<int, 3>> centers;
    for (int z = 0; z < mask.nz; ++z)
        for (int y = 0; y < mask.ny; ++y)
            for (int x = 0; x < mask.nx; ++x)
                if (mask.at(x, y, z) != 0.0f) centers.push_back({x, y, z});
    if (centers.empty()) throw std::runtime_error("extract_patches: no lesion voxels to train on");

    const int n = static_cast<int>(centers.size());
    PatchSet set;
    set.coords = std::move(centers);
    for (std::size_t c = 0; c < contrasts.size(); ++c)
        set.contrasts.emplace_back(n, 1, patch_h, patch_w);
    set.targets = Tensor4<float>(n, 1, patch_h, patch_w);

    for (int i = 0; i < n; ++i) {
        const auto [x, y, z] = set.coords[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < contrasts.size(); ++c)
            detail::copy_patch(contrasts[c], x, y, z, set.contrasts[c], i);
        detail::copy_patch(target, x, y, z, set.targets, i);
    }
    return set;
}

namespace detail {

inline PatchSet select_patches(const PatchSet& src, const std::vector<std::size_t>& idx) {
    PatchSet out;
    if (idx.empty()) return out;
    const int n = static_cast<int>(idx.size());
    for (const auto& c : src.contrasts) out.contrasts.emplace_back(n, 1, c.h, c.w);
    out.targets = Tensor4<float>(n, 1, src.targets.h, src.targets.w);
    const std::size_t plane = static_cast<std::size_t>(src.targets.h) * src.targets.w;
    for (int i = 0; i < n; ++i) {
        const std::size_t j = idx[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < src.contrasts.size(); ++c)
            std::copy_n(src.contrasts[c].data.begin() + static_cast<std::ptrdiff_t>(j * plane),
                        plane, out.contrasts[c].data.begin() + static_cast<std::ptrdiff_t>(i) * static_cast<std::ptrdiff_t>(plane));
        std::copy_n(src.targets.data.begin() + static_cast<std::ptrdiff_t>(j * plane), plane,
                    out.targets.data.begin() + static_cast<std::ptrdiff_t>(i) * static_cast<std::ptrdiff_t>(plane));
        out.coords.push_back(src.coords[j]);
    }
    return out;
}

}  // namespace detail

/// Disjoint, exhaustive, seeded-shuffle split; the validation part gets
/// round(fraction * n) patches.
inline std::pair<PatchSet, PatchSet> split_train_validation(const PatchSet& patches,
                                                            double fraction, std::uint64_t seed) {
    const int n = patches.count();
    if (n < 5) throw std::runtime_error("split_train_validation: need at least 5 patches");
    require(fraction > 0.0 && fraction < 1.0, "split_train_validation: fraction must be in (0,1)");

    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(seed);
    rng.shuffle(idx);

    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> val_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    return {detail::select_patches(patches, train_idx), detail::select_patches(patches, val_idx)};
}

/// Concatenate patch sets from several volumes (all must share patch dims and
/// contrast count). Coordinates keep their per-volume meaning.
inline PatchSet merge_patch_sets(const std::vector<PatchSet>& sets) {
    require(!sets.empty(), "merge_patch_sets: empty input");
    PatchSet out;
    int total = 0;
    for (const auto& s : sets) {
        require(s.contrasts.size() == sets[0].contrasts.size() &&
                    s.targets.h == sets[0].targets.h && s.targets.w == sets[0].targets.w,
                "merge_patch_sets: incompatible patch sets");
        total += s.count();
    }
    for (const auto& c : sets[0].contrasts) out.contrasts.emplace_back(total, 1, c.h, c.w);
    out.targets = Tensor4<float>(total, 1, sets[0].targets.h, sets[0].targets.w);
    const std::size_t plane = static_cast<std::size_t>(out.targets.h) * out.targets.w;
    std::size_t off = 0;
    for (const auto& s : sets) {
        for (std::size_t c = 0; c < s.contrasts.size(); ++c)
            std::copy(s.contrasts[c].data.begin(), s.contrasts[c].data.end(),
                      out.contrasts[c].data.begin() + static_cast<std::ptrdiff_t>(off * plane));
        std::copy(s.targets.data.begin(), s.targets.data.end(),
                  out.targets.data.begin() + static_cast<std::ptrdiff_t>(off * plane));
        out.coords.insert(out.coords.end(), s.coords.begin(), s.coords.end());
        off += static_cast<std::size_t>(s.count());
    }
    return out;
}

}  // namespace flexconn
