#include "doctest.h"

#include <random>

#include "skillforge/error.hpp"
#include "skillforge/geometry.hpp"
#include "support/checks.hpp"

namespace sf = skillforge;
using skillforge::testsupport::throws_code;

namespace {

// Mirrors the RLE walk with plain pixel marking.
std::vector<std::uint8_t> rasterize(const sf::SegmentationMask& mask) {
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(mask.width) * mask.height, 0);
    for (const auto& run : mask.runs) {
        for (std::int64_t i = run.start; i < run.start + run.length; ++i) {
            grid[static_cast<std::size_t>(i)] = 1;
        }
    }
    return grid;
}

}  // namespace

TEST_CASE("validate_box accepts proper boxes and rejects degenerate ones") {
    CHECK_NOTHROW(sf::validate_box({0, 0, 1, 1}));
    CHECK_NOTHROW(sf::validate_box({10, 20, 30, 40}));
    CHECK(throws_code(sf::ErrorCode::DegenerateBox, [] { sf::validate_box({0, 0, 0, 10}); }));
    CHECK(throws_code(sf::ErrorCode::DegenerateBox, [] { sf::validate_box({0, 0, 10, 0}); }));
    CHECK(throws_code(sf::ErrorCode::DegenerateBox, [] { sf::validate_box({5, 5, 5, 5}); }));
    CHECK(throws_code(sf::ErrorCode::DegenerateBox, [] { sf::validate_box({10, 0, 5, 10}); }));
    CHECK(throws_code(sf::ErrorCode::DegenerateBox, [] { sf::validate_box({-1, 0, 5, 5}); }));
    CHECK(throws_code(sf::ErrorCode::DegenerateBox, [] { sf::validate_box({0, -3, 5, 5}); }));
}

TEST_CASE("box dimensions and area") {
    const sf::BoundingBox box{2, 4, 6, 8};
    CHECK(box.width() == 4);
    CHECK(box.height() == 4);
    CHECK(box.area() == 16);
}

TEST_CASE("center of a box") {
    CHECK(sf::center({0, 0, 10, 10}) == std::pair{5.0, 5.0});
    CHECK(sf::center({2, 4, 6, 8}) == std::pair{4.0, 6.0});
    CHECK(sf::center({0, 0, 1, 1}) == std::pair{0.5, 0.5});
    CHECK(throws_code(sf::ErrorCode::DegenerateBox, [] { sf::center({3, 3, 3, 9}); }));
}

TEST_CASE("validate_mask enforces sorted in-bounds non-empty runs") {
    sf::SegmentationMask mask{4, 4, {{0, 2}, {6, 3}}};
    CHECK_NOTHROW(sf::validate_mask(mask));
    CHECK(mask.pixel_count() == 5);

    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::validate_mask({4, 4, {}}); }));
    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::validate_mask({4, 4, {{14, 3}}}); }));
    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::validate_mask({4, 4, {{-1, 2}}}); }));
    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::validate_mask({4, 4, {{0, 0}}}); }));
    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::validate_mask({4, 4, {{6, 2}, {0, 2}}}); }));
    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::validate_mask({4, 4, {{0, 3}, {2, 2}}}); }));
    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::validate_mask({0, 4, {{0, 1}}}); }));
}

TEST_CASE("mask_extent is the tight half-open bound, runs may cross rows") {
    // Row 1 columns 1..2 plus row 2 columns 0..3 on a 4-wide grid: the run
    // (5, 7) covers both.
    sf::SegmentationMask mask{4, 4, {{5, 7}}};
    sf::validate_mask(mask);
    const sf::BoundingBox extent = sf::mask_extent(mask);
    CHECK(extent == sf::BoundingBox{0, 1, 4, 3});

    sf::SegmentationMask dot{8, 8, {{27, 1}}};
    CHECK(sf::mask_extent(dot) == sf::BoundingBox{3, 3, 4, 4});
}

TEST_CASE("box_as_mask decodes to exactly the box interior") {
    const sf::BoundingBox box{1, 2, 4, 5};
    const sf::SegmentationMask mask = sf::box_as_mask(box, 6, 6);
    CHECK_NOTHROW(sf::validate_mask(mask));
    CHECK(mask.pixel_count() == box.area());
    CHECK(sf::mask_extent(mask) == box);

    const auto grid = rasterize(mask);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) {
            const bool inside = x >= box.x_min && x < box.x_max && y >= box.y_min && y < box.y_max;
            CHECK(grid[static_cast<std::size_t>(y) * 6 + x] == (inside ? 1 : 0));
        }
    }

    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds,
                      [] { sf::box_as_mask({0, 0, 10, 10}, 8, 8); }));
}

TEST_CASE("mask_intersection_count matches brute-force rasterization") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coord(0, 14);
    std::uniform_int_distribution<int> len(1, 8);

    for (int iter = 0; iter < 200; ++iter) {
        auto random_mask = [&] {
            sf::SegmentationMask mask{16, 16, {}};
            std::int64_t pos = coord(rng);
            while (pos < 16 * 16) {
                const std::int64_t run_len = std::min<std::int64_t>(len(rng), 16 * 16 - pos);
                mask.runs.push_back({pos, run_len});
                pos += run_len + 1 + coord(rng);
            }
            sf::validate_mask(mask);
            return mask;
        };
        const sf::SegmentationMask a = random_mask();
        const sf::SegmentationMask b = random_mask();

        const auto ga = rasterize(a);
        const auto gb = rasterize(b);
        std::int64_t expected = 0;
        for (std::size_t i = 0; i < ga.size(); ++i) expected += ga[i] && gb[i];

        CHECK(sf::mask_intersection_count(a, b) == expected);
        CHECK(sf::mask_intersection_count(b, a) == expected);
    }
}

TEST_CASE("validate_object enforces label, confidence and mask containment") {
    sf::SceneObject obj;
    obj.object_id = "cup1";
    obj.label = "cup";
    obj.bbox = {10, 10, 20, 20};
    CHECK_NOTHROW(sf::validate_object(obj));

    sf::SceneObject no_label = obj;
    no_label.label.clear();
    CHECK(throws_code(sf::ErrorCode::InvalidInput, [&] { sf::validate_object(no_label); }));

    sf::SceneObject no_id = obj;
    no_id.object_id.clear();
    CHECK(throws_code(sf::ErrorCode::InvalidInput, [&] { sf::validate_object(no_id); }));

    sf::SceneObject bad_conf = obj;
    bad_conf.confidence = 1.5;
    CHECK(throws_code(sf::ErrorCode::InvalidInput, [&] { sf::validate_object(bad_conf); }));

    // Mask within the 2-pixel dilation slack is fine; 3 pixels out is not.
    sf::SceneObject slack_ok = obj;
    slack_ok.mask = sf::box_as_mask({8, 8, 22, 22}, 32, 32);
    CHECK_NOTHROW(sf::validate_object(slack_ok));

    sf::SceneObject escaped = obj;
    escaped.mask = sf::box_as_mask({7, 10, 20, 20}, 32, 32);
    CHECK(throws_code(sf::ErrorCode::MaskOutOfBounds, [&] { sf::validate_object(escaped); }));
}
