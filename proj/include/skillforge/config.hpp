#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "skillforge/abstraction.hpp"

namespace skillforge {

/// Process-wide settings. Resolution order: command-line flags override
/// environment variables (SKILLFORGE_<KEY>), which override the key=value
/// config file, which overrides these defaults.
struct GlobalConfig {
    std::filesystem::path fixtures_dir = "fixtures";
    std::filesystem::path library_path = "library.json";
    std::filesystem::path templates_dir = "templates";
    std::filesystem::path profiles_dir = "profiles";
    std::filesystem::path lexicon_path = "lexicon/verbs.json";
    std::filesystem::path planner_rules_path = "fixtures/planner_rules.json";
    Granularity granularity = Granularity::Medium;
    std::uint64_t seed = 0;
    bool seed_set = false;  // tracked for the CI-mode reproducibility gate
    std::string planner_backend = "mock";        // mock | http
    std::string abstraction_backend = "lexicon";  // lexicon
    std::string perception_backend = "fixture";  // fixture | http
    bool replan_each_step = false;
    int retry_limit = 0;
    std::optional<std::string> planner_endpoint;
    std::optional<std::string> perception_endpoint;
    std::string api_key_env = "SKILLFORGE_API_KEY";
    double http_timeout_seconds = 5.0;
    int http_max_retries = 2;
    bool ci_mode = false;
};

/// Applies one key=value setting; shared by the config file and environment
/// paths. Unknown keys and unparsable values are InvalidInput.
void apply_config_key(GlobalConfig& config, const std::string& key, const std::string& value);

/// Key=value lines, '#' comments, blank lines ignored.
void apply_config_file(GlobalConfig& config, const std::filesystem::path& path);

/// Reads SKILLFORGE_<UPPERCASE_KEY> for every config key.
void apply_environment(GlobalConfig& config);

}  // namespace skillforge
