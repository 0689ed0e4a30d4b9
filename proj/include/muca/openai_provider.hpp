#pragma once

#include "muca/llm.hpp"

#include <memory>
#include <string>

namespace muca {

struct OpenAiSettings {
    std::string base_url = "https://api.openai.com";  // may end in "/v1"
    std::string model = "gpt-4";
    std::string api_key;
    int timeout_s = 60;
    double temperature = 0.0;
};

/// Chat-completions client for OpenAI-compatible endpoints. Rate limits,
/// server errors and transport failures are reported as transient so the
/// client retries them; other HTTP errors are not retried.
class OpenAiProvider : public Provider {
public:
    explicit OpenAiProvider(OpenAiSettings settings);
    ~OpenAiProvider() override;

    std::string id() const override { return "openai:" + settings_.model; }

private:
    ProviderResponse do_complete(const ProviderRequest& request) override;

    struct Impl;
    OpenAiSettings settings_;
    std::string path_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace muca
