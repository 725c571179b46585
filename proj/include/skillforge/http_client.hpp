#pragma once

#include <json.hpp>

#include <optional>
#include <string>

namespace skillforge {

enum class BackendKind { Fixture, Http };

const char* to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

/// Connection settings shared by every HTTP-backed model client.
struct BackendConfig {
    BackendKind backend_kind = BackendKind::Fixture;
    std::optional<std::string> endpoint_url;  // required for Http
    std::optional<std::string> api_key_env;   // env var holding the key
    double timeout_seconds = 5.0;             // per attempt
    int max_retries = 2;
};

/// Throws InvalidInput when the configuration is inconsistent.
void validate_config(const BackendConfig& config);

/// POSTs `body` as JSON and returns the parsed JSON response. Retries
/// connection failures and 5xx responses with a fixed short backoff; the
/// whole call never blocks past timeout_seconds * (max_retries + 1).
/// Throws BackendUnavailable, Timeout or FixtureMissing (HTTP 404).
nlohmann::json http_post_json(const BackendConfig& config, const nlohmann::json& body);

}  // namespace skillforge
