#include "skillforge/geometry.hpp"

#include <algorithm>

#include "skillforge/error.hpp"

namespace skillforge {

void validate_box(const BoundingBox& box) {
    if (box.x_min < 0 || box.y_min < 0) {
        throw Error(ErrorCode::DegenerateBox, "negative coordinates");
    }
    if (box.x_min >= box.x_max || box.y_min >= box.y_max) {
        throw Error(ErrorCode::DegenerateBox,
                    "box [" + std::to_string(box.x_min) + "," + std::to_string(box.y_min) +
                        "," + std::to_string(box.x_max) + "," + std::to_string(box.y_max) +
                        "] has no interior");
    }
}

std::pair<double, double> center(const BoundingBox& box) {
    validate_box(box);
    return {(box.x_min + box.x_max) / 2.0, (box.y_min + box.y_max) / 2.0};
}

std::int64_t SegmentationMask::pixel_count() const {
    std::int64_t total = 0;
    for (const auto& run : runs) total += run.length;
    return total;
}

void validate_mask(const SegmentationMask& mask) {
    if (mask.width <= 0 || mask.height <= 0) {
        throw Error(ErrorCode::MaskOutOfBounds, "mask grid has no area");
    }
    const std::int64_t grid = static_cast<std::int64_t>(mask.width) * mask.height;
    std::int64_t prev_end = -1;
    for (const auto& run : mask.runs) {
        if (run.length <= 0 || run.start < 0 || run.start + run.length > grid) {
            throw Error(ErrorCode::MaskOutOfBounds,
                        "run (" + std::to_string(run.start) + "," +
                            std::to_string(run.length) + ") outside " +
                            std::to_string(mask.width) + "x" + std::to_string(mask.height));
        }
        if (run.start <= prev_end) {
            throw Error(ErrorCode::MaskOutOfBounds, "runs unsorted or overlapping");
        }
        prev_end = run.start + run.length - 1;
    }
    if (mask.pixel_count() == 0) {
        throw Error(ErrorCode::MaskOutOfBounds, "mask decodes to zero pixels");
    }
}

BoundingBox mask_extent(const SegmentationMask& mask) {
    int min_x = mask.width, max_x = -1;
    int min_y = mask.height, max_y = -1;
    for (const auto& run : mask.runs) {
        // Split the run at row boundaries so column extents stay exact.
        std::int64_t pos = run.start;
        std::int64_t remaining = run.length;
        while (remaining > 0) {
            const int row = static_cast<int>(pos / mask.width);
            const int col = static_cast<int>(pos % mask.width);
            const std::int64_t in_row = std::min<std::int64_t>(remaining, mask.width - col);
            min_y = std::min(min_y, row);
            max_y = std::max(max_y, row);
            min_x = std::min(min_x, col);
            max_x = std::max(max_x, static_cast<int>(col + in_row - 1));
            pos += in_row;
            remaining -= in_row;
        }
    }
    if (max_x < 0) {
        throw Error(ErrorCode::MaskOutOfBounds, "extent of empty mask");
    }
    return BoundingBox{min_x, min_y, max_x + 1, max_y + 1};
}

SegmentationMask box_as_mask(const BoundingBox& box, int grid_width, int grid_height) {
    validate_box(box);
    if (box.x_max > grid_width || box.y_max > grid_height) {
        throw Error(ErrorCode::MaskOutOfBounds, "box exceeds grid");
    }
    SegmentationMask mask;
    mask.width = grid_width;
    mask.height = grid_height;
    mask.runs.reserve(static_cast<std::size_t>(box.height()));
    for (int y = box.y_min; y < box.y_max; ++y) {
        mask.runs.push_back(MaskRun{static_cast<std::int64_t>(y) * grid_width + box.x_min,
                                    static_cast<std::int64_t>(box.width())});
    }
    return mask;
}

std::int64_t mask_intersection_count(const SegmentationMask& a, const SegmentationMask& b) {
    std::int64_t total = 0;
    std::size_t i = 0, j = 0;
    while (i < a.runs.size() && j < b.runs.size()) {
        const std::int64_t a_end = a.runs[i].start + a.runs[i].length;
        const std::int64_t b_end = b.runs[j].start + b.runs[j].length;
        const std::int64_t lo = std::max(a.runs[i].start, b.runs[j].start);
        const std::int64_t hi = std::min(a_end, b_end);
        if (hi > lo) total += hi - lo;
        if (a_end <= b_end) {
            ++i;
        } else {
            ++j;
        }
    }
    return total;
}

void validate_object(const SceneObject& obj) {
    if (obj.object_id.empty()) {
        throw Error(ErrorCode::InvalidInput, "object_id empty");
    }
    if (obj.label.empty()) {
        throw Error(ErrorCode::InvalidInput, "label empty for object " + obj.object_id);
    }
    if (obj.confidence < 0.0 || obj.confidence > 1.0) {
        throw Error(ErrorCode::InvalidInput, "confidence outside [0,1] for " + obj.object_id);
    }
    validate_box(obj.bbox);
    if (obj.mask) {
        validate_mask(*obj.mask);
        const BoundingBox extent = mask_extent(*obj.mask);
        if (extent.x_min < obj.bbox.x_min - kMaskBoxSlackPx ||
            extent.y_min < obj.bbox.y_min - kMaskBoxSlackPx ||
            extent.x_max > obj.bbox.x_max + kMaskBoxSlackPx ||
            extent.y_max > obj.bbox.y_max + kMaskBoxSlackPx) {
            throw Error(ErrorCode::MaskOutOfBounds,
                        "mask foreground escapes bbox for " + obj.object_id);
        }
    }
}

}  // namespace skillforge
