#include "skillforge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "skillforge/error.hpp"

namespace skillforge {

const char* to_string(RelationKind kind) {
    switch (kind) {
        case RelationKind::LeftOf: return "LeftOf";
        case RelationKind::RightOf: return "RightOf";
        case RelationKind::Above: return "Above";
        case RelationKind::Below: return "Below";
        case RelationKind::OnTopOf: return "OnTopOf";
        case RelationKind::Beneath: return "Beneath";
        case RelationKind::Inside: return "Inside";
        case RelationKind::Contains: return "Contains";
        case RelationKind::NextTo: return "NextTo";
        case RelationKind::Overlapping: return "Overlapping";
        case RelationKind::Disjoint: return "Disjoint";
    }
    return "?";
}

RelationKind relation_kind_from_string(const std::string& name) {
    static const std::pair<const char*, RelationKind> table[] = {
        {"LeftOf", RelationKind::LeftOf},       {"RightOf", RelationKind::RightOf},
        {"Above", RelationKind::Above},         {"Below", RelationKind::Below},
        {"OnTopOf", RelationKind::OnTopOf},     {"Beneath", RelationKind::Beneath},
        {"Inside", RelationKind::Inside},       {"Contains", RelationKind::Contains},
        {"NextTo", RelationKind::NextTo},       {"Overlapping", RelationKind::Overlapping},
        {"Disjoint", RelationKind::Disjoint},
    };
    for (const auto& [text, kind] : table) {
        if (name == text) return kind;
    }
    throw Error(ErrorCode::InvalidInput, "unknown relation kind '" + name + "'");
}

const SceneObject* SceneGraph::find_object(const std::string& object_id) const {
    for (const auto& obj : objects) {
        if (obj.object_id == object_id) return &obj;
    }
    return nullptr;
}

namespace {

// Shared measurements for one unordered pair. Derived from masks when both
// objects carry one on the same grid, from boxes otherwise.
struct PairBasis {
    BoundingBox extent_a;
    BoundingBox extent_b;
    std::int64_t count_a = 0;
    std::int64_t count_b = 0;
    std::int64_t intersection = 0;
};

std::int64_t box_intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const std::int64_t w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const std::int64_t h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    return (w > 0 && h > 0) ? w * h : 0;
}

PairBasis pair_basis(const SceneObject& a, const SceneObject& b) {
    PairBasis basis;
    const bool mask_based = a.mask && b.mask && a.mask->width == b.mask->width &&
                            a.mask->height == b.mask->height;
    if (mask_based) {
        basis.extent_a = mask_extent(*a.mask);
        basis.extent_b = mask_extent(*b.mask);
        basis.count_a = a.mask->pixel_count();
        basis.count_b = b.mask->pixel_count();
        basis.intersection = mask_intersection_count(*a.mask, *b.mask);
    } else {
        basis.extent_a = a.bbox;
        basis.extent_b = b.bbox;
        basis.count_a = a.bbox.area();
        basis.count_b = b.bbox.area();
        basis.intersection = box_intersection_area(a.bbox, b.bbox);
    }
    return basis;
}

double axis_overlap_ratio(int a_lo, int a_hi, int b_lo, int b_hi) {
    const double overlap = std::min(a_hi, b_hi) - std::max(a_lo, b_lo);
    const double denom = std::min(a_hi - a_lo, b_hi - b_lo);
    return overlap > 0.0 ? overlap / denom : 0.0;
}

double extent_distance(const BoundingBox& a, const BoundingBox& b) {
    const double dx = std::max({a.x_min - b.x_max, b.x_min - a.x_max, 0});
    const double dy = std::max({a.y_min - b.y_max, b.y_min - a.y_max, 0});
    return std::hypot(dx, dy);
}

struct DirectionalVerdicts {
    bool left_of = false;
    bool above = false;
    bool on_top_of = false;
    bool inside = false;
};

DirectionalVerdicts judge_direction(const PairBasis& basis, const RelationRuleConfig& cfg) {
    const auto& ea = basis.extent_a;
    const auto& eb = basis.extent_b;
    const double cx_a = (ea.x_min + ea.x_max) / 2.0;
    const double cx_b = (eb.x_min + eb.x_max) / 2.0;
    const double cy_a = (ea.y_min + ea.y_max) / 2.0;
    const double cy_b = (eb.y_min + eb.y_max) / 2.0;
    const double h_overlap = axis_overlap_ratio(ea.x_min, ea.x_max, eb.x_min, eb.x_max);
    const double v_overlap = axis_overlap_ratio(ea.y_min, ea.y_max, eb.y_min, eb.y_max);
    const double gap_below_a = static_cast<double>(eb.y_min) - ea.y_max;
    const double containment =
        static_cast<double>(basis.intersection) / static_cast<double>(basis.count_a);

    DirectionalVerdicts v;
    v.left_of = cx_a < cx_b && ea.x_max <= cx_b && v_overlap >= cfg.side_overlap_min;
    v.above = cy_a < cy_b && ea.y_max <= cy_b && h_overlap >= cfg.side_overlap_min;
    v.on_top_of = h_overlap >= cfg.on_top_overlap_min && gap_below_a >= 0.0 &&
                  gap_below_a <= cfg.on_top_gap_max;
    // The strict size comparison keeps Inside and Contains mutually exclusive
    // when two near-identical regions contain each other above the threshold.
    v.inside = containment >= cfg.containment_min && basis.count_a < basis.count_b;
    return v;
}

PairBasis flipped(const PairBasis& basis) {
    PairBasis out;
    out.extent_a = basis.extent_b;
    out.extent_b = basis.extent_a;
    out.count_a = basis.count_b;
    out.count_b = basis.count_a;
    out.intersection = basis.intersection;
    return out;
}

}  // namespace

OverlapMetrics overlap_metrics(const SceneObject& a, const SceneObject& b) {
    validate_box(a.bbox);
    validate_box(b.bbox);
    const PairBasis basis = pair_basis(a, b);
    OverlapMetrics m;
    const std::int64_t uni = basis.count_a + basis.count_b - basis.intersection;
    m.iou = uni > 0 ? static_cast<double>(basis.intersection) / static_cast<double>(uni) : 0.0;
    m.containment_a_in_b =
        static_cast<double>(basis.intersection) / static_cast<double>(basis.count_a);
    m.horizontal_overlap = axis_overlap_ratio(basis.extent_a.x_min, basis.extent_a.x_max,
                                              basis.extent_b.x_min, basis.extent_b.x_max);
    m.vertical_gap = static_cast<double>(basis.extent_b.y_min) - basis.extent_a.y_max;
    return m;
}

std::vector<SpatialRelation> infer_relations(const std::vector<SceneObject>& objects,
                                             const RelationRuleConfig& config) {
    if (objects.empty()) {
        throw Error(ErrorCode::InvalidInput, "infer_relations needs at least one object");
    }
    std::set<std::string> seen;
    for (const auto& obj : objects) {
        validate_object(obj);
        if (!seen.insert(obj.object_id).second) {
            throw Error(ErrorCode::InvalidInput, "duplicate object_id " + obj.object_id);
        }
    }

    std::vector<SpatialRelation> out;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        for (std::size_t j = i + 1; j < objects.size(); ++j) {
            const auto& a = objects[i];
            const auto& b = objects[j];
            const PairBasis ab = pair_basis(a, b);
            const DirectionalVerdicts fwd = judge_direction(ab, config);
            const DirectionalVerdicts rev = judge_direction(flipped(ab), config);

            const std::int64_t uni = ab.count_a + ab.count_b - ab.intersection;
            const double iou =
                uni > 0 ? static_cast<double>(ab.intersection) / static_cast<double>(uni) : 0.0;
            const bool disjoint = ab.intersection == 0;
            const bool next_to =
                disjoint && extent_distance(ab.extent_a, ab.extent_b) <= config.next_to_max_distance;
            const bool overlapping = iou > 0.0 && iou < config.overlap_iou_max;

            auto emit = [&](const SceneObject& s, const SceneObject& o, RelationKind kind) {
                out.push_back(SpatialRelation{s.object_id, o.object_id, kind});
            };
            if (fwd.left_of) {
                emit(a, b, RelationKind::LeftOf);
                emit(b, a, RelationKind::RightOf);
            }
            if (rev.left_of) {
                emit(b, a, RelationKind::LeftOf);
                emit(a, b, RelationKind::RightOf);
            }
            if (fwd.above) {
                emit(a, b, RelationKind::Above);
                emit(b, a, RelationKind::Below);
            }
            if (rev.above) {
                emit(b, a, RelationKind::Above);
                emit(a, b, RelationKind::Below);
            }
            if (fwd.on_top_of) {
                emit(a, b, RelationKind::OnTopOf);
                emit(b, a, RelationKind::Beneath);
            }
            if (rev.on_top_of) {
                emit(b, a, RelationKind::OnTopOf);
                emit(a, b, RelationKind::Beneath);
            }
            if (fwd.inside) {
                emit(a, b, RelationKind::Inside);
                emit(b, a, RelationKind::Contains);
            }
            if (rev.inside) {
                emit(b, a, RelationKind::Inside);
                emit(a, b, RelationKind::Contains);
            }
            if (next_to) {
                emit(a, b, RelationKind::NextTo);
                emit(b, a, RelationKind::NextTo);
            }
            if (overlapping) {
                emit(a, b, RelationKind::Overlapping);
                emit(b, a, RelationKind::Overlapping);
            }
            if (disjoint) {
                emit(a, b, RelationKind::Disjoint);
                emit(b, a, RelationKind::Disjoint);
            }
        }
    }

    std::sort(out.begin(), out.end(), [](const SpatialRelation& x, const SpatialRelation& y) {
        return std::tie(x.subject_id, x.object_id, x.kind) <
               std::tie(y.subject_id, y.object_id, y.kind);
    });
    return out;
}

}  // namespace skillforge
