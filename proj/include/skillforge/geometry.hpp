#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace skillforge {

/// Axis-aligned box in image coordinates, y growing downward.
/// Half-open on both axes: a pixel (x, y) is inside iff
/// x_min <= x < x_max and y_min <= y < y_max.
struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    int width() const { return x_max - x_min; }
    int height() const { return y_max - y_min; }
    std::int64_t area() const {
        return static_cast<std::int64_t>(width()) * height();
    }

    bool operator==(const BoundingBox&) const = default;
};

/// Throws DegenerateBox unless x_min < x_max, y_min < y_max and all
/// coordinates are non-negative.
void validate_box(const BoundingBox& box);

/// Geometric center, fractional pixels.
std::pair<double, double> center(const BoundingBox& box);

/// One foreground span in row-major linear pixel index space.
struct MaskRun {
    std::int64_t start = 0;
    std::int64_t length = 0;

    bool operator==(const MaskRun&) const = default;
};

/// Run-length encoded binary mask. Runs are sorted, non-overlapping spans
/// of the row-major pixel index range [0, width*height); a run may cross
/// row boundaries.
struct SegmentationMask {
    int width = 0;
    int height = 0;
    std::vector<MaskRun> runs;

    std::int64_t pixel_count() const;

    bool operator==(const SegmentationMask&) const = default;
};

/// Throws MaskOutOfBounds unless runs are sorted, non-overlapping, inside
/// the width*height grid, and decode to at least one pixel.
void validate_mask(const SegmentationMask& mask);

/// Tight pixel extent of the mask foreground, half-open, as a BoundingBox.
BoundingBox mask_extent(const SegmentationMask& mask);

/// Builds the mask whose foreground is exactly the box interior on a
/// grid_width x grid_height canvas. Used by detector-only pipelines that
/// fall back to box-as-mask.
SegmentationMask box_as_mask(const BoundingBox& box, int grid_width, int grid_height);

/// Foreground pixel count of the intersection of two masks on the same grid.
std::int64_t mask_intersection_count(const SegmentationMask& a, const SegmentationMask& b);

/// Detected object. Mask is optional; when present its foreground must lie
/// within the box dilated by `kMaskBoxSlackPx` pixels.
struct SceneObject {
    std::string object_id;
    std::string label;  // lowercase category noun
    BoundingBox bbox;
    std::optional<SegmentationMask> mask;
    double confidence = 1.0;

    bool operator==(const SceneObject&) const = default;
};

inline constexpr int kMaskBoxSlackPx = 2;

/// Full SceneObject invariant check; throws on violation.
void validate_object(const SceneObject& obj);

}  // namespace skillforge
