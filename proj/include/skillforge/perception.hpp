#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/http_client.hpp"
#include "skillforge/scene.hpp"
#include "skillforge/scene_io.hpp"

namespace skillforge {

struct PerceptionRequest {
    std::optional<std::string> scene_id;
    std::optional<std::string> image_ref;
    std::vector<std::string> label_hints;
};

/// The identifier named by the request; enforces the one-of invariant.
const std::string& request_key(const PerceptionRequest& request);

/// Uniform client surface over the scene describer, object detector and
/// segmenter. Implementations are immutable after construction and safe to
/// call from multiple threads.
class PerceptionBackend {
public:
    virtual ~PerceptionBackend() = default;
    virtual std::string backend_id() const = 0;
    virtual std::string describe_scene(const PerceptionRequest& request) const = 0;
    /// Boxes only, no masks; filtered by label_hints when non-empty
    /// (case-insensitive exact noun match) and ordered by object_id.
    virtual std::vector<SceneObject> detect(const PerceptionRequest& request) const = 0;
    virtual SegmentationMask segment(const std::string& scene_id,
                                     const std::string& object_id) const = 0;
};

/// Deterministic backend reading `fixtures/scenes/<scene_id>.json`.
class FixturePerception : public PerceptionBackend {
public:
    explicit FixturePerception(std::filesystem::path fixtures_dir);

    std::string backend_id() const override { return "fixture"; }
    std::string describe_scene(const PerceptionRequest& request) const override;
    std::vector<SceneObject> detect(const PerceptionRequest& request) const override;
    SegmentationMask segment(const std::string& scene_id,
                             const std::string& object_id) const override;

private:
    SceneFixture load(const std::string& key) const;

    std::filesystem::path fixtures_dir_;
};

/// JSON-over-HTTP client for externally hosted perception models. One POST
/// per operation; the request and response schemas mirror the fixture file.
class HttpPerception : public PerceptionBackend {
public:
    explicit HttpPerception(BackendConfig config);

    std::string backend_id() const override { return "http"; }
    std::string describe_scene(const PerceptionRequest& request) const override;
    std::vector<SceneObject> detect(const PerceptionRequest& request) const override;
    SegmentationMask segment(const std::string& scene_id,
                             const std::string& object_id) const override;

private:
    BackendConfig config_;
};

std::unique_ptr<PerceptionBackend> make_perception_backend(
    const BackendConfig& config, const std::filesystem::path& fixtures_dir);

/// Composes describe + detect + segment + relation inference into one
/// SceneGraph. Objects without masks fall back to box geometry downstream.
SceneGraph build_scene_graph(const PerceptionBackend& backend, const PerceptionRequest& request,
                             const RelationRuleConfig& rules = {});

}  // namespace skillforge
