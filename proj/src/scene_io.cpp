#include "skillforge/scene_io.hpp"

#include <json.hpp>

#include <fstream>

#include "skillforge/error.hpp"

namespace skillforge {

using nlohmann::json;

namespace {

json mask_to_json(const SegmentationMask& mask) {
    json runs = json::array();
    for (const auto& run : mask.runs) {
        runs.push_back(json::array({run.start, run.length}));
    }
    return json{{"width", mask.width}, {"height", mask.height}, {"runs", runs}};
}

SegmentationMask mask_from_json(const json& j) {
    SegmentationMask mask;
    mask.width = j.at("width").get<int>();
    mask.height = j.at("height").get<int>();
    for (const auto& run : j.at("runs")) {
        if (!run.is_array() || run.size() != 2) {
            throw Error(ErrorCode::MaskOutOfBounds, "mask run must be a [start, length] pair");
        }
        mask.runs.push_back(MaskRun{run[0].get<std::int64_t>(), run[1].get<std::int64_t>()});
    }
    validate_mask(mask);
    return mask;
}

json object_to_json(const SceneObject& obj) {
    json j{{"object_id", obj.object_id},
           {"label", obj.label},
           {"confidence", obj.confidence},
           {"bbox", json::array({obj.bbox.x_min, obj.bbox.y_min, obj.bbox.x_max, obj.bbox.y_max})}};
    if (obj.mask) j["mask"] = mask_to_json(*obj.mask);
    return j;
}

SceneObject object_from_json(const json& j) {
    SceneObject obj;
    obj.object_id = j.at("object_id").get<std::string>();
    obj.label = j.at("label").get<std::string>();
    obj.confidence = j.at("confidence").get<double>();
    const auto& box = j.at("bbox");
    if (!box.is_array() || box.size() != 4) {
        throw Error(ErrorCode::InvalidInput, "bbox must be [x_min, y_min, x_max, y_max]");
    }
    obj.bbox = BoundingBox{box[0].get<int>(), box[1].get<int>(), box[2].get<int>(),
                           box[3].get<int>()};
    if (j.contains("mask") && !j.at("mask").is_null()) {
        obj.mask = mask_from_json(j.at("mask"));
    }
    validate_object(obj);
    return obj;
}

}  // namespace

std::filesystem::path scene_fixture_path(const std::filesystem::path& fixtures_dir,
                                         const std::string& scene_id) {
    return fixtures_dir / "scenes" / (scene_id + ".json");
}

SceneFixture load_scene_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::FixtureMissing, "no scene fixture at " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "unreadable fixture " + path.string() + ": " + e.what());
    }
    SceneFixture fixture;
    try {
        fixture.scene_id = j.at("scene_id").get<std::string>();
        fixture.image_ref = j.value("image_ref", "");
        fixture.description = j.value("description", "");
        for (const auto& obj : j.at("objects")) {
            fixture.objects.push_back(object_from_json(obj));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "bad fixture " + path.string() + ": " + e.what());
    }
    return fixture;
}

void save_scene_fixture(const SceneFixture& fixture, const std::filesystem::path& path) {
    json objects = json::array();
    for (const auto& obj : fixture.objects) objects.push_back(object_to_json(obj));
    json j{{"scene_id", fixture.scene_id},
           {"image_ref", fixture.image_ref},
           {"description", fixture.description},
           {"objects", objects}};
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

}  // namespace skillforge
