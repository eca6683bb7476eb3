#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexconn/rng.hpp"
#include "flexconn/volume.hpp"

namespace flexconn {

/// Synthetic two-contrast brain: an ellipsoidal "brain" on empty background
/// with randomly oriented ellipsoidal lesions. Lesions are FLAIR-hyperintense
/// and MPRAGE-hypointense. Inside the exact lesion mask the intensity equals
/// the lesion mean; outside it ramps linearly back to brain tissue over about
/// one voxel, so thresholds behave nontrivially.
struct PhantomSpec {
    int nx = 64, ny = 64, nz = 64;
    double sx = 1.0, sy = 1.0, sz = 1.0;
    int n_lesions = 6;
    double radius_min = 2.0, radius_max = 5.0;  // lesion semi-axes, voxels
    double mprage_background = 0.0, mprage_brain = 0.8, mprage_lesion = 0.4;
    double flair_background = 0.0, flair_brain = 0.5, flair_lesion = 0.9;
    double noise_sigma = 0.02;
    std::uint64_t seed = 1;

    void validate() const {
        require(nx >= 8 && ny >= 8 && nz >= 8, "phantom dims too small");
        require(n_lesions >= 0, "phantom n_lesions must be >= 0");
        require(radius_min > 0.5 && radius_max >= radius_min, "phantom radius range invalid");
        require(flair_lesion > flair_brain, "phantom: lesions must be FLAIR-hyperintense");
        require(mprage_lesion < mprage_brain, "phantom: lesions must be MPRAGE-hypointense");
        require(noise_sigma >= 0.0, "phantom noise sigma must be >= 0");
    }
};

struct PhantomCase {
    Volume mprage, flair, mask;
    std::uint64_t seed = 0;
};

namespace phantom_detail {

struct Lesion {
    double cx, cy, cz;      // center, voxel coords
    double ax, ay, az;      // semi-axes, voxels
    double rot[3][3];       // world -> lesion frame
};

inline void rotation_from_angles(double a, double b, double c, double r[3][3]) {
    const double ca = std::cos(a), sa = std::sin(a);
    const double cb = std::cos(b), sb = std::sin(b);
    const double cc = std::cos(c), sc = std::sin(c);
    // Rz(a) * Ry(b) * Rx(c)
    r[0][0] = ca * cb;
    r[0][1] = ca * sb * sc - sa * cc;
    r[0][2] = ca * sb * cc + sa * sc;
    r[1][0] = sa * cb;
    r[1][1] = sa * sb * sc + ca * cc;
    r[1][2] = sa * sb * cc - ca * sc;
    r[2][0] = -sb;
    r[2][1] = cb * sc;
    r[2][2] = cb * cc;
}

// normalized ellipsoid coordinate: <= 1 inside the lesion
inline double lesion_rho(const Lesion& l, double x, double y, double z) {
    const double dx = x - l.cx, dy = y - l.cy, dz = z - l.cz;
    const double u = l.rot[0][0] * dx + l.rot[0][1] * dy + l.rot[0][2] * dz;
    const double v = l.rot[1][0] * dx + l.rot[1][1] * dy + l.rot[1][2] * dz;
    const double w = l.rot[2][0] * dx + l.rot[2][1] * dy + l.rot[2][2] * dz;
    return std::sqrt((u / l.ax) * (u / l.ax) + (v / l.ay) * (v / l.ay) + (w / l.az) * (w / l.az));
}

}  // namespace phantom_detail

/// Deterministic for a fixed spec: lesion placement draws come first, then
/// one noise draw per voxel per contrast in raster order.
inline PhantomCase generate_phantom(const PhantomSpec& spec) {
    using namespace phantom_detail;
    spec.validate();
    Rng rng(spec.seed);

    PhantomCase out;
    out.seed = spec.seed;
    out.mprage = Volume(spec.nx, spec.ny, spec.nz, spec.sx, spec.sy, spec.sz);
    out.flair = Volume(spec.nx, spec.ny, spec.nz, spec.sx, spec.sy, spec.sz);
    out.mask = Volume(spec.nx, spec.ny, spec.nz, spec.sx, spec.sy, spec.sz);

    const double bcx = 0.5 * (spec.nx - 1), bcy = 0.5 * (spec.ny - 1), bcz = 0.5 * (spec.nz - 1);
    const double bax = 0.42 * spec.nx, bay = 0.42 * spec.ny, baz = 0.42 * spec.nz;

    auto brain_rho = [&](double x, double y, double z) {
        const double u = (x - bcx) / bax, v = (y - bcy) / bay, w = (z - bcz) / baz;
        return std::sqrt(u * u + v * v + w * w);
    };

    // a candidate fits when every voxel it touches (mask and intensity ramp)
    // lies inside the brain ellipsoid, and it covers at least one mask voxel
    auto lesion_fits = [&](const Lesion& l) {
        const double reach = std::max({l.ax, l.ay, l.az}) + 1.5;
        const int x0 = std::max(0, static_cast<int>(std::floor(l.cx - reach)));
        const int x1 = std::min(spec.nx - 1, static_cast<int>(std::ceil(l.cx + reach)));
        const int y0 = std::max(0, static_cast<int>(std::floor(l.cy - reach)));
        const int y1 = std::min(spec.ny - 1, static_cast<int>(std::ceil(l.cy + reach)));
        const int z0 = std::max(0, static_cast<int>(std::floor(l.cz - reach)));
        const int z1 = std::min(spec.nz - 1, static_cast<int>(std::ceil(l.cz + reach)));
        const double rho_limit = 1.0 + 1.0 / std::min({l.ax, l.ay, l.az});
        bool any_mask_voxel = false;
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double rho = lesion_rho(l, x, y, z);
                    if (rho >= rho_limit) continue;
                    if (brain_rho(x, y, z) > 1.0) return false;
                    if (rho <= 1.0) any_mask_voxel = true;
                }
        return any_mask_voxel;
    };

    std::vector<Lesion> lesions;
    for (int li = 0; li < spec.n_lesions; ++li) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            Lesion l{};
            l.ax = rng.uniform(spec.radius_min, spec.radius_max);
            l.ay = rng.uniform(spec.radius_min, spec.radius_max);
            l.az = rng.uniform(spec.radius_min, spec.radius_max);
            rotation_from_angles(rng.uniform(0.0, 6.283185307179586),
                                 rng.uniform(0.0, 6.283185307179586),
                                 rng.uniform(0.0, 6.283185307179586), l.rot);
            l.cx = bcx + bax * rng.uniform(-1.0, 1.0);
            l.cy = bcy + bay * rng.uniform(-1.0, 1.0);
            l.cz = bcz + baz * rng.uniform(-1.0, 1.0);
            if (lesion_fits(l)) {
                lesions.push_back(l);
                placed = true;
            }
        }
        if (!placed)
            throw std::runtime_error(
                "generate_phantom: could not place lesion " + std::to_string(li + 1) +
                " inside the brain ellipsoid (radius range too large for the volume dims)");
    }

    for (int z = 0; z < spec.nz; ++z)
        for (int y = 0; y < spec.ny; ++y)
            for (int x = 0; x < spec.nx; ++x) {
                const bool in_brain = brain_rho(x, y, z) <= 1.0;
                double mpr = in_brain ? spec.mprage_brain : spec.mprage_background;
                double fla = in_brain ? spec.flair_brain : spec.flair_background;
                if (in_brain) {
                    double blend = 0.0;
                    bool inside = false;
                    for (const Lesion& l : lesions) {
                        const double rho = lesion_rho(l, x, y, z);
                        if (rho <= 1.0) {
                            inside = true;
                            blend = 1.0;
                            break;
                        }
                        // linear one-voxel intensity ramp just outside the mask
                        const double d = (rho - 1.0) * std::min({l.ax, l.ay, l.az});
                        blend = std::max(blend, std::max(0.0, 1.0 - d));
                    }
                    if (inside) out.mask.at(x, y, z) = 1.0f;
                    mpr += blend * (spec.mprage_lesion - spec.mprage_brain);
                    fla += blend * (spec.flair_lesion - spec.flair_brain);
                }
                out.mprage.at(x, y, z) = static_cast<float>(mpr);
                out.flair.at(x, y, z) = static_cast<float>(fla);
            }

    if (spec.noise_sigma > 0.0) {
        for (float& v : out.mprage.data)
            v = static_cast<float>(v + spec.noise_sigma * rng.normal());
        for (float& v : out.flair.data)
            v = static_cast<float>(v + spec.noise_sigma * rng.normal());
    }
    return out;
}

/// Cohort with per-case derived seeds and lesion loads cycling through low,
/// moderate and high regimes so total lesion volume spans a wide range.
inline std::vector<PhantomCase> generate_cohort(int n_cases, const PhantomSpec& base,
                                                std::uint64_t seed) {
    require(n_cases >= 1, "generate_cohort: n_cases must be >= 1");
    base.validate();
    std::vector<PhantomCase> cases;
    for (int i = 0; i < n_cases; ++i) {
        PhantomSpec s = base;
        s.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        const int tier = i % 3;  // 0 moderate (= base spec), 1 low, 2 high
        if (tier == 1) {
            s.n_lesions = std::max(1, base.n_lesions / 4);
            s.radius_min = std::max(0.75, 0.6 * base.radius_min);
            s.radius_max = std::max(s.radius_min, 0.6 * base.radius_max);
        } else if (tier == 2) {
            s.n_lesions = base.n_lesions * 2;
            s.radius_min = base.radius_min;
            s.radius_max = 1.3 * base.radius_max;
        }
        cases.push_back(generate_phantom(s));
    }
    return cases;
}

}  // namespace flexconn
