#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexconn/bytes.hpp"
#include "flexconn/volume.hpp"

namespace flexconn {

/// Supported NIfTI-1 datatype codes (little-endian single-file subset).
enum class NiftiDatatype : std::int16_t {
    Uint8 = 2,
    Int16 = 4,
    Float32 = 16,
    Float64 = 64,
};

namespace nifti_detail {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;  // header + 4 extension-indicator bytes

inline int bitpix_for(NiftiDatatype dt) {
    switch (dt) {
        case NiftiDatatype::Uint8: return 8;
        case NiftiDatatype::Int16: return 16;
        case NiftiDatatype::Float32: return 32;
        case NiftiDatatype::Float64: return 64;
    }
    throw std::runtime_error("nifti: unknown datatype");
}

}  // namespace nifti_detail

/// Parse a little-endian single-file NIfTI-1 volume (.nii). Values are scaled
/// by scl_slope/scl_inter when slope is nonzero; slope 0 means "no scaling"
/// per the NIfTI convention. The raw header bytes are kept on the volume so a
/// later write preserves qform/sform untouched.
inline Volume read_volume(std::istream& in, const std::string& name = "<stream>") {
    using namespace nifti_detail;
    namespace b = bytes;

    std::vector<std::uint8_t> hdr(kHeaderSize);
    in.read(reinterpret_cast<char*>(hdr.data()), static_cast<std::streamsize>(kHeaderSize));
    if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
        throw std::runtime_error("nifti: truncated header in " + name);

    if (b::load_i32(hdr.data()) != 348)
        throw std::runtime_error("nifti: bad header size (not a little-endian NIfTI-1 file): " + name);
    if (!(hdr[344] == 'n' && hdr[345] == '+' && hdr[346] == '1' && hdr[347] == 0))
        throw std::runtime_error("nifti: bad magic (expected single-file \"n+1\"): " + name);

    const int ndim = b::load_i16(hdr.data() + 40);
    if (ndim < 1 || ndim > 7)
        throw std::runtime_error("nifti: implausible dim[0] in " + name);
    int dims[3] = {1, 1, 1};
    for (int i = 0; i < 3; ++i)
        if (i < ndim) dims[i] = b::load_i16(hdr.data() + 40 + 2 * (i + 1));
    for (int i = 3; i < ndim; ++i) {
        const int extra = b::load_i16(hdr.data() + 40 + 2 * (i + 1));
        if (extra > 1)
            throw std::runtime_error("nifti: only 3D volumes supported, got a 4D+ file: " + name);
    }
    for (int i = 0; i < 3; ++i)
        if (dims[i] < 1 || dims[i] > 4096)
            throw std::runtime_error("nifti: dimension out of sanity bounds [1,4096] in " + name);

    const std::int16_t dtcode = b::load_i16(hdr.data() + 70);
    NiftiDatatype dt;
    switch (dtcode) {
        case 2: dt = NiftiDatatype::Uint8; break;
        case 4: dt = NiftiDatatype::Int16; break;
        case 16: dt = NiftiDatatype::Float32; break;
        case 64: dt = NiftiDatatype::Float64; break;
        default:
            throw std::runtime_error("nifti: unsupported datatype code " +
                                     std::to_string(dtcode) + " in " + name);
    }
    const int bitpix = b::load_i16(hdr.data() + 72);
    if (bitpix != bitpix_for(dt))
        throw std::runtime_error("nifti: bitpix inconsistent with datatype in " + name);

    double spacing[3];
    for (int i = 0; i < 3; ++i) {
        const double p = std::abs(static_cast<double>(b::load_f32(hdr.data() + 76 + 4 * (i + 1))));
        spacing[i] = p > 0.0 ? p : 1.0;
    }

    const float vox_offset_f = b::load_f32(hdr.data() + 108);
    if (!(vox_offset_f >= 348.0f) || vox_offset_f > 1e9f)
        throw std::runtime_error("nifti: implausible vox_offset in " + name);
    const std::size_t vox_offset = static_cast<std::size_t>(vox_offset_f);
    const float slope = b::load_f32(hdr.data() + 112);
    const float inter = b::load_f32(hdr.data() + 116);

    // skip from end of header to the payload
    std::size_t skip = vox_offset - kHeaderSize;
    std::vector<char> gap(4096);
    while (skip > 0) {
        const std::size_t chunk = std::min(skip, gap.size());
        in.read(gap.data(), static_cast<std::streamsize>(chunk));
        if (in.gcount() != static_cast<std::streamsize>(chunk))
            throw std::runtime_error("nifti: truncated payload in " + name);
        skip -= chunk;
    }

    Volume vol(dims[0], dims[1], dims[2], spacing[0], spacing[1], spacing[2]);
    vol.source_header = hdr;

    const std::size_t nvox = vol.size();
    const std::size_t nbytes = nvox * static_cast<std::size_t>(bitpix / 8);
    std::vector<std::uint8_t> payload(nbytes);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(nbytes));
    if (in.gcount() != static_cast<std::streamsize>(nbytes))
        throw std::runtime_error("nifti: truncated payload in " + name);

    const bool scale = slope != 0.0f && !(slope == 1.0f && inter == 0.0f);
    for (std::size_t i = 0; i < nvox; ++i) {
        float v = 0.0f;
        switch (dt) {
            case NiftiDatatype::Uint8: v = static_cast<float>(payload[i]); break;
            case NiftiDatatype::Int16:
                v = static_cast<float>(b::load_i16(payload.data() + 2 * i));
                break;
            case NiftiDatatype::Float32: v = b::load_f32(payload.data() + 4 * i); break;
            case NiftiDatatype::Float64:
                v = static_cast<float>(b::load_f64(payload.data() + 8 * i));
                break;
        }
        vol.data[i] = scale ? v * slope + inter : v;
    }
    return vol;
}

/// Write a single-file NIfTI-1 volume. Values are stored verbatim
/// (scl_slope 1, scl_inter 0); integer datatypes round and clamp. When the
/// volume carries its source header, all bytes we do not own (orientation,
/// description, units, ...) are copied through unchanged.
inline void write_volume(const Volume& vol, NiftiDatatype dt, std::ostream& out) {
    using namespace nifti_detail;
    namespace b = bytes;
    require(vol.size() > 0, "write_volume: empty volume");

    std::vector<std::uint8_t> hdr(kHeaderSize, 0);
    const bool fresh = vol.source_header.size() != kHeaderSize;
    if (!fresh) hdr = vol.source_header;

    b::store_i32(hdr.data(), 348);
    b::store_i16(hdr.data() + 40, 3);
    b::store_i16(hdr.data() + 42, static_cast<std::int16_t>(vol.nx));
    b::store_i16(hdr.data() + 44, static_cast<std::int16_t>(vol.ny));
    b::store_i16(hdr.data() + 46, static_cast<std::int16_t>(vol.nz));
    for (int i = 4; i <= 7; ++i) b::store_i16(hdr.data() + 40 + 2 * i, 1);
    b::store_i16(hdr.data() + 70, static_cast<std::int16_t>(dt));
    b::store_i16(hdr.data() + 72, static_cast<std::int16_t>(bitpix_for(dt)));
    if (fresh) {
        b::store_f32(hdr.data() + 76, 1.0f);  // qfac
        hdr[123] = 2;                         // xyzt_units: mm
    }
    b::store_f32(hdr.data() + 80, static_cast<float>(vol.sx));
    b::store_f32(hdr.data() + 84, static_cast<float>(vol.sy));
    b::store_f32(hdr.data() + 88, static_cast<float>(vol.sz));
    b::store_f32(hdr.data() + 108, static_cast<float>(kVoxOffset));
    b::store_f32(hdr.data() + 112, 1.0f);
    b::store_f32(hdr.data() + 116, 0.0f);
    hdr[344] = 'n';
    hdr[345] = '+';
    hdr[346] = '1';
    hdr[347] = 0;

    out.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(kHeaderSize));
    const char ext[4] = {0, 0, 0, 0};
    out.write(ext, 4);

    const std::size_t nvox = vol.size();
    std::vector<std::uint8_t> payload(nvox * static_cast<std::size_t>(bitpix_for(dt) / 8));
    for (std::size_t i = 0; i < nvox; ++i) {
        const float v = vol.data[i];
        switch (dt) {
            case NiftiDatatype::Uint8: {
                const long r = std::lround(std::clamp(v, 0.0f, 255.0f));
                payload[i] = static_cast<std::uint8_t>(r);
                break;
            }
            case NiftiDatatype::Int16: {
                const long r = std::lround(std::clamp(v, -32768.0f, 32767.0f));
                b::store_i16(payload.data() + 2 * i, static_cast<std::int16_t>(r));
                break;
            }
            case NiftiDatatype::Float32: b::store_f32(payload.data() + 4 * i, v); break;
            case NiftiDatatype::Float64:
                b::store_f64(payload.data() + 8 * i, static_cast<double>(v));
                break;
        }
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("write_volume: stream write failed");
}

inline Volume read_volume(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("nifti: cannot open " + path);
    return read_volume(in, path);
}

inline void write_volume(const Volume& vol, NiftiDatatype dt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("nifti: cannot create " + path);
    write_volume(vol, dt, out);
}

}  // namespace flexconn
