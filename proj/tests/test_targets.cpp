#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "flexconn/targets.hpp"
#include "oracles.hpp"

using namespace flexconn;

TEST_CASE("membership target: zero mask, isolated voxel, straight edge") {
    Volume mask(11, 11, 3);
    CHECK(make_membership_target(mask).count_nonzero() == 0);

    mask.at(5, 5, 1) = 1.0f;
    const Volume iso = make_membership_target(mask, 1.5);
    CHECK(std::abs(iso.at(5, 5, 1) - 0.14777f) < 1e-3f);

    // straight in-plane edge: lesion fills x <= 5 on slice z=1
    Volume edge_mask(12, 12, 3);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x <= 5; ++x) edge_mask.at(x, y, 1) = 1.0f;
    const Volume edge = make_membership_target(edge_mask, 1.5);
    CHECK(std::abs(edge.at(6, 6, 1) - 0.30779f) < 1e-3f);  // first voxel outside
    CHECK(edge.at(7, 6, 1) == 0.0f);                       // second voxel outside
    CHECK(std::abs(edge.at(3, 6, 1) - 1.0f) < 1e-6f);      // deep inside
    CHECK(edge.at(6, 6, 0) == 0.0f);                       // smoothing is in-plane only
}

TEST_CASE("membership target: non-binary mask rejected, output bounded") {
    Volume mask(4, 4, 2);
    mask.at(1, 1, 0) = 0.5f;
    CHECK_THROWS_AS(make_membership_target(mask), std::invalid_argument);

    Volume full(6, 6, 2);
    for (float& v : full.data) v = 1.0f;
    const Volume t = make_membership_target(full, 1.5);
    for (float v : t.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("thresholding the target at 0.30 nests between the mask and its 1-voxel dilation") {
    Volume mask(15, 15, 3);
    for (int y = 4; y <= 10; ++y)
        for (int x = 4; x <= 10; ++x) mask.at(x, y, 1) = 1.0f;
    const Volume target = make_membership_target(mask, 1.5);

    auto dilated_inplane = [&](int x, int y, int z) {
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int xx = x + dx, yy = y + dy;
                if (xx >= 0 && yy >= 0 && xx < mask.nx && yy < mask.ny &&
                    mask.at(xx, yy, z) != 0.0f)
                    return true;
            }
        return false;
    };
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 15; ++y)
            for (int x = 0; x < 15; ++x) {
                const bool thresholded = target.at(x, y, z) >= 0.30f;
                if (mask.at(x, y, z) != 0.0f) CHECK(thresholded);          // superset of lesion
                if (thresholded) CHECK(dilated_inplane(x, y, z));          // at most 1-voxel growth
            }
}

TEST_CASE("two lesions on adjacent axial slices do not interact") {
    Volume both(9, 9, 4);
    both.at(4, 4, 1) = 1.0f;
    both.at(2, 2, 2) = 1.0f;
    Volume only_z1(9, 9, 4);
    only_z1.at(4, 4, 1) = 1.0f;

    const Volume t_both = make_membership_target(both, 1.5);
    const Volume t_one = make_membership_target(only_z1, 1.5);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) CHECK(t_both.at(x, y, 1) == t_one.at(x, y, 1));
}

TEST_CASE("patch extraction: one patch per lesion voxel, centered and aligned") {
    Rng rng(61);
    Volume mprage(14, 13, 4), flair(14, 13, 4), mask(14, 13, 4);
    for (float& v : mprage.data) v = static_cast<float>(rng.uniform());
    for (float& v : flair.data) v = static_cast<float>(rng.uniform());
    const std::vector<std::array<int, 3>> lesions{
        {3, 4, 1}, {4, 4, 1}, {9, 2, 2}, {0, 0, 0}, {13, 12, 3}, {7, 7, 2}, {6, 7, 2}};
    for (const auto& [x, y, z] : lesions) mask.at(x, y, z) = 1.0f;
    const Volume target = make_membership_target(mask, 1.5);

    const PatchSet set = extract_patches({mprage, flair}, mask, 5, 5, target);
    REQUIRE(set.count() == 7);
    REQUIRE(set.contrasts.size() == 2);
    CHECK(set.targets.h == 5);
    CHECK(set.targets.w == 5);

    std::set<std::array<int, 3>> expected(lesions.begin(), lesions.end());
    std::set<std::array<int, 3>> got(set.coords.begin(), set.coords.end());
    CHECK(expected == got);

    for (int i = 0; i < set.count(); ++i) {
        const auto [x, y, z] = set.coords[static_cast<std::size_t>(i)];
        // patch centers carry the source voxel of each volume
        CHECK(set.contrasts[0].at(i, 0, 2, 2) == mprage.at(x, y, z));
        CHECK(set.contrasts[1].at(i, 0, 2, 2) == flair.at(x, y, z));
        CHECK(set.targets.at(i, 0, 2, 2) == target.at(x, y, z));
    }

    // corner lesion voxel: out-of-volume region is zero filled
    for (int i = 0; i < set.count(); ++i) {
        if (set.coords[static_cast<std::size_t>(i)] != std::array<int, 3>{0, 0, 0}) continue;
        for (int py = 0; py < 5; ++py)
            for (int px = 0; px < 5; ++px)
                if (py < 2 || px < 2) {
                    CHECK(set.contrasts[0].at(i, 0, py, px) == 0.0f);
                    CHECK(set.targets.at(i, 0, py, px) == 0.0f);
                }
    }
}

TEST_CASE("patch extraction error paths") {
    Volume vol(8, 8, 2), mask(8, 8, 2);
    const Volume target(8, 8, 2);
    CHECK_THROWS_WITH(extract_patches({vol}, mask, 5, 5, target),
                      Catch::Matchers::ContainsSubstring("no lesion voxels"));
    mask.at(1, 1, 0) = 1.0f;
    CHECK_THROWS_AS(extract_patches({vol}, mask, 4, 5, target), std::invalid_argument);
    Volume small(4, 4, 2);
    CHECK_THROWS_AS(extract_patches({small}, mask, 5, 5, target), std::invalid_argument);
}

TEST_CASE("train/validation split: sizes, disjointness, determinism") {
    Rng rng(67);
    Volume vol(12, 12, 2), mask(12, 12, 2);
    for (float& v : vol.data) v = static_cast<float>(rng.uniform());
    for (int i = 0; i < 10; ++i) mask.at(i, 3, 1) = 1.0f;
    const Volume target = make_membership_target(mask, 1.5);
    const PatchSet set = extract_patches({vol}, mask, 5, 5, target);
    REQUIRE(set.count() == 10);

    const auto [train_a, val_a] = split_train_validation(set, 0.2, 99);
    CHECK(train_a.count() == 8);
    CHECK(val_a.count() == 2);

    std::set<std::array<int, 3>> all(set.coords.begin(), set.coords.end());
    std::set<std::array<int, 3>> seen;
    for (const auto& c : train_a.coords) CHECK(seen.insert(c).second);
    for (const auto& c : val_a.coords) CHECK(seen.insert(c).second);
    CHECK(seen == all);

    const auto [train_b, val_b] = split_train_validation(set, 0.2, 99);
    CHECK(train_a.coords == train_b.coords);
    CHECK(val_a.coords == val_b.coords);
    const auto [train_c, val_c] = split_train_validation(set, 0.2, 100);
    CHECK(train_a.coords != train_c.coords);

    PatchSet tiny;
    tiny.targets = Tensor4<float>(4, 1, 5, 5);
    tiny.contrasts.emplace_back(4, 1, 5, 5);
    tiny.coords = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    CHECK_THROWS_AS(split_train_validation(tiny, 0.2, 1), std::runtime_error);
}

TEST_CASE("merge_patch_sets concatenates stacks in order") {
    Volume vol(10, 10, 2), mask1(10, 10, 2), mask2(10, 10, 2);
    for (std::size_t i = 0; i < vol.size(); ++i) vol.data[i] = static_cast<float>(i % 7);
    mask1.at(2, 2, 0) = 1.0f;
    mask2.at(5, 5, 1) = 1.0f;
    mask2.at(6, 5, 1) = 1.0f;
    const Volume t1 = make_membership_target(mask1, 1.5);
    const Volume t2 = make_membership_target(mask2, 1.5);
    const PatchSet a = extract_patches({vol}, mask1, 5, 5, t1);
    const PatchSet b = extract_patches({vol}, mask2, 5, 5, t2);
    const PatchSet m = merge_patch_sets({a, b});
    REQUIRE(m.count() == 3);
    CHECK(m.coords[0] == std::array<int, 3>{2, 2, 0});
    CHECK(m.coords[2] == std::array<int, 3>{6, 5, 1});
    for (int py = 0; py < 5; ++py)
        for (int px = 0; px < 5; ++px)
            CHECK(m.contrasts[0].at(2, 0, py, px) == b.contrasts[0].at(1, 0, py, px));
}
