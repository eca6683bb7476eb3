#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "flexconn/volume.hpp"

namespace flexconn {

/// Binary PGM (P5, 8-bit) of one axial slice, values scaled from [lo, hi] to
/// 0..255. Debug overlay output only; never feeds back into the pipeline.
inline void write_slice_pgm(const Volume& vol, int z, const std::string& path, double lo = 0.0,
                            double hi = 1.0) {
    require(z >= 0 && z < vol.nz, "write_slice_pgm: z out of range");
    require(hi > lo, "write_slice_pgm: bad intensity window");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_slice_pgm: cannot create " + path);
    out << "P5\n" << vol.nx << " " << vol.ny << "\n255\n";
    for (int y = 0; y < vol.ny; ++y)
        for (int x = 0; x < vol.nx; ++x) {
            const double v = (vol.at(x, y, z) - lo) / (hi - lo);
            const int g = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            out.put(static_cast<char>(g));
        }
    if (!out) throw std::runtime_error("write_slice_pgm: write failed for " + path);
}

}  // namespace flexconn
