#include <catch2/catch_amalgamated.hpp>

#include "flexconn/network.hpp"
#include "oracles.hpp"

using namespace flexconn;

namespace {

// hand-assembled small network (banks need not follow the standard structure
// for gradient checks); c_in chain: 1 -> 4 -> 8 -> fusion 8 -> 4 -> 8 -> head
template <typename T>
Network<T> tiny_custom_network(Rng& rng) {
    auto init = [&rng](Conv2DLayer<T>& l) {
        for (T& v : l.weights.data) v = static_cast<T>(rng.uniform(-0.3, 0.3));
        for (T& v : l.bias) v = static_cast<T>(rng.uniform(-0.1, 0.1));
    };
    Network<T> net;
    net.contrast_pathways.resize(1);
    net.contrast_pathways[0].push_back(make_conv_layer<T>(4, 1, 3));
    net.contrast_pathways[0].push_back(make_conv_layer<T>(8, 4, 5));
    net.fusion_pathway.push_back(make_conv_layer<T>(4, 8, 3));
    net.fusion_pathway.push_back(make_conv_layer<T>(8, 4, 5));
    net.head = make_conv_layer<T>(1, 8, 3);
    for_each_layer(net, init);
    return net;
}

NetworkConfig depth2_config(int num_contrasts = 2) {
    NetworkConfig cfg;
    cfg.num_contrasts = num_contrasts;
    cfg.contrast_pathway = PathwayConfig::with_depth(2);
    cfg.fusion_pathway = PathwayConfig::with_depth(2);
    return cfg;
}

}  // namespace

TEST_CASE("default contrast pathway reproduces the published parameter counts") {
    const Network<float> net = build_network<float>(NetworkConfig{}, 1);
    const std::vector<long long> expected{1152, 204800, 18432, 12800, 1152};
    REQUIRE(net.contrast_pathways.size() == 2);
    for (const auto& pathway : net.contrast_pathways) {
        REQUIRE(pathway.size() == 5);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(layer_weight_count(pathway[i]) == expected[i]);
    }
}

TEST_CASE("pathway structure: depth range, alternation, halving filter counts") {
    for (int d = 2; d <= 6; ++d) {
        const PathwayConfig p = PathwayConfig::with_depth(d);
        p.validate();
        CHECK(p.banks.back().num_filters == 8);
        CHECK(p.banks.front().num_filters == 8 << (d - 1));
        for (int i = 0; i < d; ++i) CHECK(p.banks[static_cast<std::size_t>(i)].kernel == (i % 2 ? 5 : 3));
    }
    CHECK_THROWS_AS(PathwayConfig::with_depth(1), std::invalid_argument);
    CHECK_THROWS_AS(PathwayConfig::with_depth(7), std::invalid_argument);

    PathwayConfig bad = PathwayConfig::with_depth(3);
    bad.banks[0].num_filters = 13;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("build_network is deterministic and realizes the config") {
    const NetworkConfig cfg = depth2_config();
    const Network<float> a = build_network<float>(cfg, 42);
    const Network<float> b = build_network<float>(cfg, 42);
    const auto pa = parameter_blocks(a), pb = parameter_blocks(b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i].size() == pb[i].size());
        for (std::size_t j = 0; j < pa[i].size(); ++j) CHECK(pa[i][j] == pb[i][j]);
    }

    const Network<float> c = build_network<float>(cfg, 43);
    bool any_diff = false;
    const auto pc = parameter_blocks(c);
    for (std::size_t i = 0; i < pa.size() && !any_diff; ++i)
        for (std::size_t j = 0; j < pa[i].size(); ++j)
            if (pa[i][j] != pc[i][j]) {
                any_diff = true;
                break;
            }
    CHECK(any_diff);

    // fusion input channels: 8 filters per contrast pathway, concatenated
    CHECK(cfg.fusion_input_channels() == 16);
    CHECK(build_network<float>(NetworkConfig{}, 7).fusion_pathway[0].in_channels() == 16);
}

TEST_CASE("count_parameters: published rows and empty network") {
    auto l1 = make_conv_layer<float>(128, 1, 3);
    CHECK(layer_weight_count(l1) == 1152);
    auto l2 = make_conv_layer<float>(64, 128, 5);
    CHECK(layer_weight_count(l2) == 204800);

    Network<float> empty;
    const ParameterCounts pc = count_parameters(empty);
    // a default-constructed head is an empty layer
    CHECK(pc.weights == 0);

    const Network<float> net = build_network<float>(depth2_config(), 1);
    const ParameterCounts c = count_parameters(net);
    // per contrast: 3*3*1*16 + 5*5*16*8; fusion: 3*3*16*16 + 5*5*16*8; head 3*3*8
    const long long expected_w = 2 * (144 + 3200) + (2304 + 3200) + 72;
    CHECK(c.weights == expected_w);
    CHECK(c.biases == 2 * (16 + 8) + (16 + 8) + 1);
}

TEST_CASE("forward_slice: zero input through a freshly built network is zero") {
    const Network<float> net = build_network<float>(depth2_config(), 3);  // biases start at 0
    std::vector<Tensor4<float>> slices{Tensor4<float>(1, 1, 20, 24), Tensor4<float>(1, 1, 20, 24)};
    const Tensor4<float> out = forward_slice(net, slices);
    CHECK(out.h == 20);
    CHECK(out.w == 24);
    for (float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("forward_slice preserves spatial dims for several slice sizes") {
    const Network<float> net = build_network<float>(depth2_config(), 5);
    for (auto [h, w] : {std::pair{35, 35}, std::pair{64, 64}, std::pair{181, 217}}) {
        Rng rng(h);
        std::vector<Tensor4<float>> slices{oracle::random_tensor<float>(rng, 1, 1, h, w, 0.0, 1.0),
                                           oracle::random_tensor<float>(rng, 1, 1, h, w, 0.0, 1.0)};
        const Tensor4<float> out = forward_slice(net, slices);
        CHECK(out.n == 1);
        CHECK(out.c == 1);
        CHECK(out.h == h);
        CHECK(out.w == w);
        for (float v : out.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("a patch forwarded alone matches its embedding in a large zero slice") {
    const NetworkConfig cfg = depth2_config();
    REQUIRE(receptive_radius(cfg) <= 17);  // fits inside a 35x35 patch at its center
    const Network<float> net = build_network<float>(cfg, 9);

    Rng rng(13);
    std::vector<Tensor4<float>> patch{oracle::random_tensor<float>(rng, 1, 1, 35, 35, 0.0, 1.0),
                                      oracle::random_tensor<float>(rng, 1, 1, 35, 35, 0.0, 1.0)};
    const int H = 81, W = 91, oy = (H - 35) / 2, ox = (W - 35) / 2;
    std::vector<Tensor4<float>> big{Tensor4<float>(1, 1, H, W), Tensor4<float>(1, 1, H, W)};
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 35; ++y)
            for (int x = 0; x < 35; ++x)
                big[static_cast<std::size_t>(c)].at(0, 0, oy + y, ox + x) =
                    patch[static_cast<std::size_t>(c)].at(0, 0, y, x);

    const Tensor4<float> small_out = forward_slice(net, patch);
    const Tensor4<float> big_out = forward_slice(net, big);
    CHECK(std::abs(small_out.at(0, 0, 17, 17) - big_out.at(0, 0, oy + 17, ox + 17)) < 1e-5f);
}

TEST_CASE("translation equivariance away from boundaries") {
    const Network<float> net = build_network<float>(depth2_config(1), 21);
    Rng rng(19);
    const int H = 40, W = 44, dy = 3, dx = 5;
    const auto base = oracle::random_tensor<float>(rng, 1, 1, H, W, 0.0, 1.0);
    Tensor4<float> shifted(1, 1, H, W);
    for (int y = 0; y + dy < H; ++y)
        for (int x = 0; x + dx < W; ++x) shifted.at(0, 0, y + dy, x + dx) = base.at(0, 0, y, x);

    const Tensor4<float> out_base = forward_slice(net, {base});
    const Tensor4<float> out_shift = forward_slice(net, {shifted});
    const int r = receptive_radius(net.config);
    for (int y = r; y + dy + r < H; ++y)
        for (int x = r; x + dx + r < W; ++x)
            CHECK(std::abs(out_base.at(0, 0, y, x) - out_shift.at(0, 0, y + dy, x + dx)) < 1e-5f);
}

TEST_CASE("no cross-contrast mixing before concatenation") {
    const Network<float> net = build_network<float>(depth2_config(), 31);
    Rng rng(23);
    const auto c1 = oracle::random_tensor<float>(rng, 1, 1, 16, 16, 0.0, 1.0);
    const auto c2a = oracle::random_tensor<float>(rng, 1, 1, 16, 16, 0.0, 1.0);
    const Tensor4<float> c2b(1, 1, 16, 16);  // zeroed second contrast

    ForwardCache<float> cache_a, cache_b;
    forward_training(net, {c1, c2a}, &cache_a);
    forward_training(net, {c1, c2b}, &cache_b);
    const auto& act_a = cache_a.contrast_act[0].back();
    const auto& act_b = cache_b.contrast_act[0].back();
    for (std::size_t i = 0; i < act_a.size(); ++i) CHECK(act_a.data[i] == act_b.data[i]);
}

TEST_CASE("batch of one equals forward_slice; batch order permutes outputs") {
    const Network<float> net = build_network<float>(depth2_config(), 11);
    Rng rng(29);
    const auto p1a = oracle::random_tensor<float>(rng, 1, 1, 17, 17, 0.0, 1.0);
    const auto p1b = oracle::random_tensor<float>(rng, 1, 1, 17, 17, 0.0, 1.0);
    const auto p2a = oracle::random_tensor<float>(rng, 1, 1, 17, 17, 0.0, 1.0);
    const auto p2b = oracle::random_tensor<float>(rng, 1, 1, 17, 17, 0.0, 1.0);

    auto stack = [](const Tensor4<float>& a, const Tensor4<float>& b) {
        Tensor4<float> t(2, 1, a.h, a.w);
        std::copy(a.data.begin(), a.data.end(), t.data.begin());
        std::copy(b.data.begin(), b.data.end(), t.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
        return t;
    };

    const Tensor4<float> batch = forward_training(net, {stack(p1a, p1b), stack(p2a, p2b)});
    const Tensor4<float> swapped = forward_training(net, {stack(p1b, p1a), stack(p2b, p2a)});
    const Tensor4<float> single = forward_training(net, {p1a, p2a});

    const std::size_t plane = static_cast<std::size_t>(batch.h) * batch.w;
    for (std::size_t i = 0; i < plane; ++i) {
        CHECK(std::abs(batch.data[i] - single.data[i]) < 1e-6f);
        CHECK(batch.data[i] == swapped.data[plane + i]);
        CHECK(batch.data[plane + i] == swapped.data[i]);
    }
}

TEST_CASE("whole-network gradients match finite differences (tiny custom net)") {
    // scan seeds for a configuration whose pre-activations all stay clear of
    // the ReLU kink, so a 1e-5 finite-difference step cannot cross it
    Network<double> net;
    std::vector<Tensor4<double>> inputs;
    Tensor4<double> upstream;
    ForwardCache<double> cache;
    bool found = false;
    for (std::uint64_t seed = 47; seed < 147 && !found; ++seed) {
        Rng rng(seed);
        net = tiny_custom_network<double>(rng);
        inputs = {oracle::random_tensor<double>(rng, 1, 1, 8, 8, 0.0, 1.0)};
        upstream = oracle::random_tensor<double>(rng, 1, 1, 8, 8);
        forward_training(net, inputs, &cache);
        double min_abs = 1e9;
        for (const auto& banks : cache.contrast_pre)
            for (const auto& t : banks)
                for (double v : t.data) min_abs = std::min(min_abs, std::abs(v));
        for (const auto& t : cache.fusion_pre)
            for (double v : t.data) min_abs = std::min(min_abs, std::abs(v));
        for (double v : cache.head_pre.data) min_abs = std::min(min_abs, std::abs(v));
        found = min_abs > 1e-3;
    }
    REQUIRE(found);

    auto objective = [&]() {
        const Tensor4<double> out = forward_training(net, inputs);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * upstream.data[i];
        return s;
    };
    const Network<double> grads = backward_training(net, inputs, cache, upstream);

    auto gblocks = parameter_blocks(grads);
    auto pblocks = parameter_blocks(net);
    Rng pick(53);
    for (int probe = 0; probe < 20; ++probe) {
        const std::size_t b = pick.index(pblocks.size());
        if (pblocks[b].empty()) continue;
        const std::size_t j = pick.index(pblocks[b].size());
        const double fd = oracle::central_difference(pblocks[b][j], objective);
        CHECK(oracle::rel_err(static_cast<double>(gblocks[b][j]), fd, 1e-7) < 1e-4);
    }
}

TEST_CASE("forward rejects mismatched slice dims") {
    const Network<float> net = build_network<float>(depth2_config(), 2);
    std::vector<Tensor4<float>> bad{Tensor4<float>(1, 1, 8, 8), Tensor4<float>(1, 1, 9, 8)};
    CHECK_THROWS_AS(forward_slice(net, bad), std::invalid_argument);
}
