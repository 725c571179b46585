#include "skillforge/http_client.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "skillforge/error.hpp"

namespace skillforge {

using nlohmann::json;

const char* to_string(BackendKind kind) {
    return kind == BackendKind::Fixture ? "fixture" : "http";
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "fixture") return BackendKind::Fixture;
    if (name == "http") return BackendKind::Http;
    throw Error(ErrorCode::InvalidInput, "unknown backend kind '" + name + "'");
}

void validate_config(const BackendConfig& config) {
    if (config.timeout_seconds <= 0.0) {
        throw Error(ErrorCode::InvalidInput, "timeout must be positive");
    }
    if (config.max_retries < 0) {
        throw Error(ErrorCode::InvalidInput, "max_retries must be >= 0");
    }
    if (config.backend_kind == BackendKind::Http && !config.endpoint_url) {
        throw Error(ErrorCode::InvalidInput, "http backend requires endpoint_url");
    }
}

namespace {

constexpr auto kRetryBackoff = std::chrono::milliseconds(50);

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /path, defaults to "/"
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidInput, "endpoint_url missing scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

json http_post_json(const BackendConfig& config, const json& body) {
    validate_config(config);
    if (config.backend_kind != BackendKind::Http) {
        throw Error(ErrorCode::InvalidInput, "http_post_json called on non-http backend");
    }
    const SplitUrl url = split_url(*config.endpoint_url);

    httplib::Client client(url.base);
    const auto timeout_us =
        std::chrono::microseconds(static_cast<long long>(config.timeout_seconds * 1e6));
    client.set_connection_timeout(timeout_us);
    client.set_read_timeout(timeout_us);
    client.set_write_timeout(timeout_us);
    if (config.api_key_env) {
        if (const char* key = std::getenv(config.api_key_env->c_str())) {
            client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
        }
    }

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::microseconds>(
                              timeout_us * (config.max_retries + 1));
    const std::string payload = body.dump();

    std::string last_detail = "no attempt made";
    bool timed_out = false;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline) break;
            std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
                kRetryBackoff, deadline - now));
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            timed_out = true;
            break;
        }

        auto result = client.Post(url.path, payload, "application/json");
        if (result) {
            if (result->status == 404) {
                throw Error(ErrorCode::FixtureMissing,
                            "endpoint reported unknown resource: " + result->body);
            }
            if (result->status >= 500) {
                last_detail = "HTTP " + std::to_string(result->status);
                continue;
            }
            if (result->status != 200) {
                throw Error(ErrorCode::BackendUnavailable,
                            "HTTP " + std::to_string(result->status) + " from " +
                                *config.endpoint_url);
            }
            try {
                return json::parse(result->body);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::BackendUnavailable,
                            std::string("unparseable backend response: ") + e.what());
            }
        }

        switch (result.error()) {
            case httplib::Error::ConnectionTimeout:
            case httplib::Error::Read:
            case httplib::Error::Write:
                timed_out = true;
                last_detail = httplib::to_string(result.error());
                break;
            default:
                last_detail = httplib::to_string(result.error());
                break;
        }
    }

    if (timed_out) {
        throw Error(ErrorCode::Timeout, "no response from " + *config.endpoint_url +
                                            " within budget (" + last_detail + ")");
    }
    throw Error(ErrorCode::BackendUnavailable,
                *config.endpoint_url + " unreachable after " +
                    std::to_string(config.max_retries + 1) + " attempts (" + last_detail + ")");
}

}  // namespace skillforge
