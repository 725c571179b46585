#include "skillforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include "skillforge/error.hpp"

namespace skillforge {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::InvalidInput, "boolean expected for " + key + ", got: " + value);
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        int parsed = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidInput, "integer expected for " + key + ", got: " + value);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        unsigned long long parsed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidInput,
                    "unsigned integer expected for " + key + ", got: " + value);
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double parsed = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidInput, "number expected for " + key + ", got: " + value);
    }
}

const char* kConfigKeys[] = {
    "fixtures_dir",      "library_path",         "templates_dir",
    "profiles_dir",      "lexicon_path",         "planner_rules_path",
    "granularity",       "seed",                 "planner_backend",
    "abstraction_backend", "perception_backend", "replan_each_step",
    "retry_limit",       "planner_endpoint",     "perception_endpoint",
    "api_key_env",       "http_timeout_seconds", "http_max_retries",
    "ci_mode",
};

}  // namespace

void apply_config_key(GlobalConfig& config, const std::string& key, const std::string& value) {
    if (key == "fixtures_dir") {
        config.fixtures_dir = value;
    } else if (key == "library_path") {
        config.library_path = value;
    } else if (key == "templates_dir") {
        config.templates_dir = value;
    } else if (key == "profiles_dir") {
        config.profiles_dir = value;
    } else if (key == "lexicon_path") {
        config.lexicon_path = value;
    } else if (key == "planner_rules_path") {
        config.planner_rules_path = value;
    } else if (key == "granularity") {
        config.granularity = granularity_from_string(value);
    } else if (key == "seed") {
        config.seed = parse_u64(key, value);
        config.seed_set = true;
    } else if (key == "planner_backend") {
        if (value != "mock" && value != "http") {
            throw Error(ErrorCode::InvalidInput, "planner_backend must be mock or http");
        }
        config.planner_backend = value;
    } else if (key == "abstraction_backend") {
        if (value != "lexicon") {
            throw Error(ErrorCode::InvalidInput, "abstraction_backend must be lexicon");
        }
        config.abstraction_backend = value;
    } else if (key == "perception_backend") {
        if (value != "fixture" && value != "http") {
            throw Error(ErrorCode::InvalidInput, "perception_backend must be fixture or http");
        }
        config.perception_backend = value;
    } else if (key == "replan_each_step") {
        config.replan_each_step = parse_bool(key, value);
    } else if (key == "retry_limit") {
        config.retry_limit = parse_int(key, value);
        if (config.retry_limit < 0) {
            throw Error(ErrorCode::InvalidInput, "retry_limit must be non-negative");
        }
    } else if (key == "planner_endpoint") {
        config.planner_endpoint = value;
    } else if (key == "perception_endpoint") {
        config.perception_endpoint = value;
    } else if (key == "api_key_env") {
        config.api_key_env = value;
    } else if (key == "http_timeout_seconds") {
        config.http_timeout_seconds = parse_double(key, value);
        if (config.http_timeout_seconds <= 0.0) {
            throw Error(ErrorCode::InvalidInput, "http_timeout_seconds must be positive");
        }
    } else if (key == "http_max_retries") {
        config.http_max_retries = parse_int(key, value);
        if (config.http_max_retries < 0) {
            throw Error(ErrorCode::InvalidInput, "http_max_retries must be non-negative");
        }
    } else if (key == "ci_mode") {
        config.ci_mode = parse_bool(key, value);
    } else {
        throw Error(ErrorCode::InvalidInput, "unknown config key: " + key);
    }
}

void apply_config_file(GlobalConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read config file: " + path.string());
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidInput,
                        path.string() + ":" + std::to_string(line_no) +
                            ": expected key=value, got: " + stripped);
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        // tolerate quoted values from toml-style files
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        apply_config_key(config, key, value);
    }
}

void apply_environment(GlobalConfig& config) {
    for (const char* key : kConfigKeys) {
        std::string env_name = "SKILLFORGE_";
        for (const char* c = key; *c != '\0'; ++c) {
            env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
        }
        const char* value = std::getenv(env_name.c_str());
        if (value != nullptr) {
            apply_config_key(config, key, value);
        }
    }
}

}  // namespace skillforge
