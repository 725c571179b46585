#pragma once

#include <string>
#include <vector>

#include "skillforge/geometry.hpp"

namespace skillforge {

enum class RelationKind {
    LeftOf,
    RightOf,
    Above,
    Below,
    OnTopOf,
    Beneath,
    Inside,
    Contains,
    NextTo,
    Overlapping,
    Disjoint,
};

const char* to_string(RelationKind kind);
RelationKind relation_kind_from_string(const std::string& name);

struct SpatialRelation {
    std::string subject_id;
    std::string object_id;
    RelationKind kind;

    bool operator==(const SpatialRelation&) const = default;
};

struct SceneGraph {
    std::string scene_id;
    std::vector<SceneObject> objects;
    std::vector<SpatialRelation> relations;
    std::string description;

    const SceneObject* find_object(const std::string& object_id) const;

    bool operator==(const SceneGraph&) const = default;
};

/// Pairwise overlap measurements. Mask-based when both objects carry masks
/// on the same grid, box-based otherwise.
struct OverlapMetrics {
    double iou = 0.0;                 // |A∩B| / |A∪B|
    double containment_a_in_b = 0.0;  // |A∩B| / |A|
    double horizontal_overlap = 0.0;  // x-extent overlap / min extent width
    double vertical_gap = 0.0;        // y_min(B) - y_max(A), signed pixels
};

OverlapMetrics overlap_metrics(const SceneObject& a, const SceneObject& b);

/// Thresholds for the rule-based relation inference. Defaults are tuned for
/// 640x480 frames; every value is adjustable.
struct RelationRuleConfig {
    double side_overlap_min = 0.25;    // cross-axis extent overlap for LeftOf/Above
    double containment_min = 0.95;     // Inside/Contains
    double on_top_overlap_min = 0.5;   // horizontal overlap for OnTopOf
    double on_top_gap_max = 5.0;       // vertical contact tolerance, pixels
    double next_to_max_distance = 15.0;  // box-edge distance, pixels
    double overlap_iou_max = 0.95;     // Overlapping upper bound
};

/// Rule-based spatial relation closure over all ordered object pairs.
/// Output is sorted by (subject_id, object_id, kind) and antisymmetric pairs
/// are always emitted both ways.
std::vector<SpatialRelation> infer_relations(const std::vector<SceneObject>& objects,
                                             const RelationRuleConfig& config = {});

}  // namespace skillforge
