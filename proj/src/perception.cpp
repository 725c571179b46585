#include "skillforge/perception.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "skillforge/error.hpp"

namespace skillforge {

using nlohmann::json;

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

/// A hint keeps an object when it equals the whole label or any single word
/// of it, so "red" retains "red block" without admitting unrelated clutter.
bool hint_matches(const std::string& folded_label, const std::string& folded_hint) {
    if (folded_label == folded_hint) return true;
    std::istringstream words(folded_label);
    std::string word;
    while (words >> word) {
        if (word == folded_hint) return true;
    }
    return false;
}

std::vector<SceneObject> filter_and_order(std::vector<SceneObject> objects,
                                          const std::vector<std::string>& hints) {
    if (!hints.empty()) {
        std::vector<std::string> folded;
        folded.reserve(hints.size());
        for (const auto& hint : hints) folded.push_back(lowercase(hint));
        std::erase_if(objects, [&](const SceneObject& obj) {
            const std::string label = lowercase(obj.label);
            return std::none_of(folded.begin(), folded.end(), [&](const std::string& hint) {
                return hint_matches(label, hint);
            });
        });
    }
    std::sort(objects.begin(), objects.end(),
              [](const SceneObject& a, const SceneObject& b) { return a.object_id < b.object_id; });
    return objects;
}

}  // namespace

const std::string& request_key(const PerceptionRequest& request) {
    if (request.scene_id.has_value() == request.image_ref.has_value()) {
        throw Error(ErrorCode::InvalidInput,
                    "request must set exactly one of scene_id / image_ref");
    }
    return request.scene_id ? *request.scene_id : *request.image_ref;
}

FixturePerception::FixturePerception(std::filesystem::path fixtures_dir)
    : fixtures_dir_(std::move(fixtures_dir)) {}

SceneFixture FixturePerception::load(const std::string& key) const {
    return load_scene_fixture(scene_fixture_path(fixtures_dir_, key));
}

std::string FixturePerception::describe_scene(const PerceptionRequest& request) const {
    const SceneFixture fixture = load(request_key(request));
    if (fixture.description.empty()) {
        throw Error(ErrorCode::FixtureMissing,
                    "fixture " + fixture.scene_id + " has no description");
    }
    return fixture.description;
}

std::vector<SceneObject> FixturePerception::detect(const PerceptionRequest& request) const {
    SceneFixture fixture = load(request_key(request));
    for (auto& obj : fixture.objects) obj.mask.reset();
    return filter_and_order(std::move(fixture.objects), request.label_hints);
}

SegmentationMask FixturePerception::segment(const std::string& scene_id,
                                            const std::string& object_id) const {
    const SceneFixture fixture = load(scene_id);
    for (const auto& obj : fixture.objects) {
        if (obj.object_id == object_id) {
            if (!obj.mask) {
                throw Error(ErrorCode::NoMaskAvailable,
                            "no mask stored for " + object_id + " in " + scene_id);
            }
            return *obj.mask;
        }
    }
    throw Error(ErrorCode::NoMaskAvailable, "object " + object_id + " not in " + scene_id);
}

HttpPerception::HttpPerception(BackendConfig config) : config_(std::move(config)) {
    validate_config(config_);
}

namespace {

json request_body(const char* op, const PerceptionRequest& request) {
    json body{{"op", op}};
    if (request.scene_id) body["scene_id"] = *request.scene_id;
    if (request.image_ref) body["image_ref"] = *request.image_ref;
    if (!request.label_hints.empty()) body["label_hints"] = request.label_hints;
    return body;
}

SceneObject object_from_wire(const json& j) {
    SceneObject obj;
    obj.object_id = j.at("object_id").get<std::string>();
    obj.label = lowercase(j.at("label").get<std::string>());
    obj.confidence = j.value("confidence", 1.0);
    const auto& box = j.at("bbox");
    obj.bbox = BoundingBox{box.at(0).get<int>(), box.at(1).get<int>(), box.at(2).get<int>(),
                           box.at(3).get<int>()};
    validate_object(obj);
    return obj;
}

SegmentationMask mask_from_wire(const json& j) {
    SegmentationMask mask;
    mask.width = j.at("width").get<int>();
    mask.height = j.at("height").get<int>();
    for (const auto& run : j.at("runs")) {
        mask.runs.push_back(MaskRun{run.at(0).get<std::int64_t>(), run.at(1).get<std::int64_t>()});
    }
    validate_mask(mask);
    return mask;
}

}  // namespace

std::string HttpPerception::describe_scene(const PerceptionRequest& request) const {
    request_key(request);
    const json reply = http_post_json(config_, request_body("describe_scene", request));
    const std::string text = reply.value("description", "");
    if (text.empty()) {
        throw Error(ErrorCode::BackendUnavailable, "describe_scene returned empty description");
    }
    return text;
}

std::vector<SceneObject> HttpPerception::detect(const PerceptionRequest& request) const {
    request_key(request);
    const json reply = http_post_json(config_, request_body("detect", request));
    std::vector<SceneObject> objects;
    for (const auto& j : reply.at("objects")) {
        objects.push_back(object_from_wire(j));
    }
    return filter_and_order(std::move(objects), request.label_hints);
}

SegmentationMask HttpPerception::segment(const std::string& scene_id,
                                         const std::string& object_id) const {
    const json reply = http_post_json(
        config_, json{{"op", "segment"}, {"scene_id", scene_id}, {"object_id", object_id}});
    if (!reply.contains("mask") || reply.at("mask").is_null()) {
        throw Error(ErrorCode::NoMaskAvailable, "no mask for " + object_id);
    }
    return mask_from_wire(reply.at("mask"));
}

std::unique_ptr<PerceptionBackend> make_perception_backend(
    const BackendConfig& config, const std::filesystem::path& fixtures_dir) {
    validate_config(config);
    if (config.backend_kind == BackendKind::Http) {
        return std::make_unique<HttpPerception>(config);
    }
    return std::make_unique<FixturePerception>(fixtures_dir);
}

SceneGraph build_scene_graph(const PerceptionBackend& backend, const PerceptionRequest& request,
                             const RelationRuleConfig& rules) {
    SceneGraph graph;
    graph.scene_id = request_key(request);
    graph.description = backend.describe_scene(request);
    graph.objects = backend.detect(request);
    for (auto& obj : graph.objects) {
        try {
            obj.mask = backend.segment(graph.scene_id, obj.object_id);
            validate_object(obj);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoMaskAvailable) throw;
            // Box-only object; relation rules fall back to box geometry.
        }
    }
    if (!graph.objects.empty()) {
        graph.relations = infer_relations(graph.objects, rules);
    }
    return graph;
}

}  // namespace skillforge
