#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexconn/bytes.hpp"
#include "flexconn/network.hpp"

namespace flexconn {

/// Model file ("FLXC"): magic, format version, a structural descriptor that
/// fully determines every parameter block length, the float32 little-endian
/// parameter payload in canonical order (contrast pathways, fusion, head;
/// weights then bias per bank), and a trailing CRC-32 over everything before
/// it. See docs/formats.md for the byte-level layout.
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace model_detail {

inline void append_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    std::uint8_t b[4];
    bytes::store_u32(b, v);
    buf.insert(buf.end(), b, b + 4);
}

inline void append_f32(std::vector<std::uint8_t>& buf, float v) {
    std::uint8_t b[4];
    bytes::store_f32(b, v);
    buf.insert(buf.end(), b, b + 4);
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > buf.size()) throw std::runtime_error("model file: truncated");
        const std::uint32_t v = bytes::load_u32(buf.data() + pos);
        pos += 4;
        return v;
    }
    float f32() {
        if (pos + 4 > buf.size()) throw std::runtime_error("model file: truncated");
        const float v = bytes::load_f32(buf.data() + pos);
        pos += 4;
        return v;
    }
};

}  // namespace model_detail

inline std::vector<std::uint8_t> serialize_model(const Network<float>& net) {
    namespace d = model_detail;
    std::vector<std::uint8_t> buf;
    buf.push_back('F');
    buf.push_back('L');
    buf.push_back('X');
    buf.push_back('C');
    d::append_u32(buf, kModelFormatVersion);
    d::append_u32(buf, static_cast<std::uint32_t>(net.config.num_contrasts));
    d::append_u32(buf, static_cast<std::uint32_t>(net.config.contrast_pathway.depth()));
    for (const FilterBank& b : net.config.contrast_pathway.banks) {
        d::append_u32(buf, static_cast<std::uint32_t>(b.num_filters));
        d::append_u32(buf, static_cast<std::uint32_t>(b.kernel));
    }
    d::append_u32(buf, static_cast<std::uint32_t>(net.config.fusion_pathway.depth()));
    for (const FilterBank& b : net.config.fusion_pathway.banks) {
        d::append_u32(buf, static_cast<std::uint32_t>(b.num_filters));
        d::append_u32(buf, static_cast<std::uint32_t>(b.kernel));
    }
    d::append_u32(buf, static_cast<std::uint32_t>(net.config.head_kernel));

    for_each_layer(net, [&](const Conv2DLayer<float>& l) {
        for (float v : l.weights.data) d::append_f32(buf, v);
        for (float v : l.bias) d::append_f32(buf, v);
    });

    d::append_u32(buf, bytes::crc32(buf.data(), buf.size()));
    return buf;
}

inline Network<float> deserialize_model(const std::vector<std::uint8_t>& buf) {
    namespace d = model_detail;
    if (buf.size() < 8 || buf[0] != 'F' || buf[1] != 'L' || buf[2] != 'X' || buf[3] != 'C')
        throw std::runtime_error("model file: bad magic (expected FLXC)");
    if (buf.size() < 4 + 4)
        throw std::runtime_error("model file: truncated");

    // checksum covers everything before the final 4 bytes
    const std::uint32_t stored_crc = bytes::load_u32(buf.data() + buf.size() - 4);
    const std::uint32_t actual_crc = bytes::crc32(buf.data(), buf.size() - 4);
    if (stored_crc != actual_crc)
        throw std::runtime_error("model file: checksum mismatch (file corrupted)");

    d::Reader r{buf, 4};
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw std::runtime_error("model file: unsupported format version " +
                                 std::to_string(version));

    NetworkConfig cfg;
    cfg.num_contrasts = static_cast<int>(r.u32());
    auto read_pathway = [&r]() {
        PathwayConfig p;
        const std::uint32_t depth = r.u32();
        if (depth > 16) throw std::runtime_error("model file: implausible pathway depth");
        for (std::uint32_t i = 0; i < depth; ++i) {
            FilterBank b;
            b.num_filters = static_cast<int>(r.u32());
            b.kernel = static_cast<int>(r.u32());
            if (b.num_filters <= 0 || b.num_filters > 4096 || b.kernel <= 0 || b.kernel > 15 ||
                b.kernel % 2 == 0)
                throw std::runtime_error("model file: implausible filter bank descriptor");
            p.banks.push_back(b);
        }
        return p;
    };
    cfg.contrast_pathway = read_pathway();
    cfg.fusion_pathway = read_pathway();
    cfg.head_kernel = static_cast<int>(r.u32());
    cfg.validate();

    Network<float> net;
    net.config = cfg;
    net.contrast_pathways.resize(static_cast<std::size_t>(cfg.num_contrasts));
    auto read_layer = [&r](int c_out, int c_in, int k) {
        auto layer = make_conv_layer<float>(c_out, c_in, k);
        for (float& v : layer.weights.data) v = r.f32();
        for (float& v : layer.bias) v = r.f32();
        return layer;
    };
    for (auto& pathway : net.contrast_pathways) {
        int c_in = 1;
        for (const FilterBank& b : cfg.contrast_pathway.banks) {
            pathway.push_back(read_layer(b.num_filters, c_in, b.kernel));
            c_in = b.num_filters;
        }
    }
    int c_in = cfg.fusion_input_channels();
    for (const FilterBank& b : cfg.fusion_pathway.banks) {
        net.fusion_pathway.push_back(read_layer(b.num_filters, c_in, b.kernel));
        c_in = b.num_filters;
    }
    net.head = read_layer(1, c_in, cfg.head_kernel);

    if (r.pos != buf.size() - 4)
        throw std::runtime_error("model file: trailing bytes after parameter payload");
    return net;
}

inline void save_model(const Network<float>& net, std::ostream& out) {
    const std::vector<std::uint8_t> buf = serialize_model(net);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("save_model: stream write failed");
}

inline Network<float> load_model(std::istream& in) {
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    return deserialize_model(buf);
}

inline void save_model(const Network<float>& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot create " + path);
    save_model(net, out);
}

inline Network<float> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    return load_model(in);
}

}  // namespace flexconn
