#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skillforge/geometry.hpp"

namespace skillforge {

/// On-disk scene fixture. Relations are never stored in fixtures; they are
/// recomputed from geometry on every load.
struct SceneFixture {
    std::string scene_id;
    std::string image_ref;
    std::string description;
    std::vector<SceneObject> objects;
};

SceneFixture load_scene_fixture(const std::filesystem::path& path);
void save_scene_fixture(const SceneFixture& fixture, const std::filesystem::path& path);

/// Fixture path `<fixtures_dir>/scenes/<scene_id>.json`.
std::filesystem::path scene_fixture_path(const std::filesystem::path& fixtures_dir,
                                         const std::string& scene_id);

}  // namespace skillforge
