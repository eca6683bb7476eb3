#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "flexconn/tensor.hpp"

namespace flexconn {

/// 3D scalar grid with voxel spacing in mm. Data is row-major with x fastest
/// and z slowest, so an axial slice (fixed z) is one contiguous ny*nx block.
/// `source_header` keeps the original NIfTI header bytes when the volume was
/// read from file, so qform/sform survive a write unchanged.
struct Volume {
    int nx = 0, ny = 0, nz = 0;
    double sx = 1.0, sy = 1.0, sz = 1.0;
    std::vector<float> data;
    std::vector<std::uint8_t> source_header;

    Volume() = default;
    Volume(int nx_, int ny_, int nz_, double sx_ = 1.0, double sy_ = 1.0, double sz_ = 1.0)
        : nx(nx_), ny(ny_), nz(nz_), sx(sx_), sy(sy_), sz(sz_),
          data(static_cast<std::size_t>(nx_) * ny_ * nz_, 0.0f) {
        require(nx_ > 0 && ny_ > 0 && nz_ > 0, "Volume dims must be positive");
        require(sx_ > 0.0 && sy_ > 0.0 && sz_ > 0.0, "Volume spacing must be positive");
    }

    std::size_t size() const { return data.size(); }

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }
    float& at(int x, int y, int z) { return data[index(x, y, z)]; }
    const float& at(int x, int y, int z) const { return data[index(x, y, z)]; }

    bool same_dims(const Volume& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }

    bool is_binary() const {
        for (float v : data)
            if (v != 0.0f && v != 1.0f) return false;
        return true;
    }

    long long count_nonzero() const {
        long long n = 0;
        for (float v : data) n += (v != 0.0f);
        return n;
    }

    double voxel_volume_mm3() const { return sx * sy * sz; }
};

/// Copy axial slice z into a (1, 1, ny, nx) tensor (rows are y, columns x).
template <typename T>
Tensor4<T> axial_slice(const Volume& vol, int z) {
    require(z >= 0 && z < vol.nz, "axial_slice: z out of range");
    Tensor4<T> t(1, 1, vol.ny, vol.nx);
    const float* src = vol.data.data() + vol.index(0, 0, z);
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<T>(src[i]);
    return t;
}

template <typename T>
void set_axial_slice(Volume& vol, int z, const Tensor4<T>& t) {
    require(z >= 0 && z < vol.nz, "set_axial_slice: z out of range");
    require(t.n == 1 && t.c == 1 && t.h == vol.ny && t.w == vol.nx,
            "set_axial_slice: slice dims mismatch");
    float* dst = vol.data.data() + vol.index(0, 0, z);
    for (std::size_t i = 0; i < t.size(); ++i) dst[i] = static_cast<float>(t.data[i]);
}

/// Reorder storage so the chosen axis (0 = x, 1 = y, 2 = z) becomes the
/// slicing (z) axis. Axis 2 is a copy. Used by the CLI --slice-axis override;
/// move_z_to_axis is the inverse. The source header does not travel with the
/// permuted volume (dims would no longer match it).
inline Volume move_axis_to_z(const Volume& v, int axis) {
    require(axis >= 0 && axis <= 2, "move_axis_to_z: axis must be 0, 1, or 2");
    if (axis == 2) return v;
    Volume out;
    if (axis == 0) {
        out = Volume(v.ny, v.nz, v.nx, v.sy, v.sz, v.sx);
        for (int z = 0; z < v.nz; ++z)
            for (int y = 0; y < v.ny; ++y)
                for (int x = 0; x < v.nx; ++x) out.at(y, z, x) = v.at(x, y, z);
    } else {
        out = Volume(v.nx, v.nz, v.ny, v.sx, v.sz, v.sy);
        for (int z = 0; z < v.nz; ++z)
            for (int y = 0; y < v.ny; ++y)
                for (int x = 0; x < v.nx; ++x) out.at(x, z, y) = v.at(x, y, z);
    }
    return out;
}

inline Volume move_z_to_axis(const Volume& v, int axis) {
    require(axis >= 0 && axis <= 2, "move_z_to_axis: axis must be 0, 1, or 2");
    if (axis == 2) return v;
    Volume out;
    if (axis == 0) {
        out = Volume(v.nz, v.nx, v.ny, v.sz, v.sx, v.sy);
        for (int z = 0; z < v.nz; ++z)
            for (int y = 0; y < v.ny; ++y)
                for (int x = 0; x < v.nx; ++x) out.at(z, x, y) = v.at(x, y, z);
    } else {
        out = Volume(v.nx, v.nz, v.ny, v.sx, v.sz, v.sy);
        for (int z = 0; z < v.nz; ++z)
            for (int y = 0; y < v.ny; ++y)
                for (int x = 0; x < v.nx; ++x) out.at(x, z, y) = v.at(x, y, z);
    }
    return out;
}

}  // namespace flexconn
