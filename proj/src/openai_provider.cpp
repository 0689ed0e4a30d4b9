#include "muca/openai_provider.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <mutex>

namespace muca {

using json = nlohmann::json;

struct OpenAiProvider::Impl {
    explicit Impl(const std::string& origin) : client(origin) {}

    std::mutex mu;
    httplib::Client client;
};

namespace {

// Splits "scheme://host[:port][/prefix]" into origin and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("provider base_url needs a scheme: '" + url + "'");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

}  // namespace

OpenAiProvider::OpenAiProvider(OpenAiSettings settings) : settings_(std::move(settings)) {
    auto [origin, prefix] = split_url(settings_.base_url);
    path_ = prefix.ends_with("/v1") ? prefix + "/chat/completions" : prefix + "/v1/chat/completions";
    impl_ = std::make_unique<Impl>(origin);
    impl_->client.set_connection_timeout(settings_.timeout_s, 0);
    impl_->client.set_read_timeout(settings_.timeout_s, 0);
    impl_->client.set_write_timeout(settings_.timeout_s, 0);
    if (!settings_.api_key.empty()) impl_->client.set_bearer_token_auth(settings_.api_key);
}

OpenAiProvider::~OpenAiProvider() = default;

ProviderResponse OpenAiProvider::do_complete(const ProviderRequest& request) {
    const json body = {{"model", settings_.model},
                       {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                       {"max_tokens", request.max_output_hint},
                       {"temperature", settings_.temperature}};

    const auto started = std::chrono::steady_clock::now();
    httplib::Result res;
    {
        std::lock_guard lock(impl_->mu);
        res = impl_->client.Post(path_, body.dump(), "application/json");
    }
    if (!res) throw TransientProviderError("request failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
        throw TransientProviderError("HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw ProviderUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }

    ProviderResponse out;
    try {
        const auto j = json::parse(res->body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        out.text = content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderUnavailable(std::string("malformed completion response: ") + e.what());
    }
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                         .count();
    out.provider_id = id();
    return out;
}

}  // namespace muca
