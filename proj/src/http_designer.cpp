#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "rfsearch/designer.hpp"
#include "rfsearch/errors.hpp"

namespace rfsearch {

using nlohmann::json;

std::string chat_request_body(const PromptBundle& prompt, const std::string& model, double temperature) {
    json body;
    body["model"] = model;
    body["messages"] = json::array({
        {{"role", "system"}, {"content", prompt.system_text}},
        {{"role", "user"}, {"content", prompt.user_text}},
    });
    body["temperature"] = temperature;
    return body.dump();
}

std::string chat_response_content(const std::string& body) {
    try {
        const json doc = json::parse(body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("unexpected chat-completion reply: {}", e.what()));
    }
}

HttpDesigner::HttpDesigner(HttpDesignerConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("http designer needs an endpoint");
    if (config_.model.empty()) throw ConfigError("http designer needs a model name");
    if (config_.transport_retries < 0) throw ConfigError("transport_retries must be non-negative");
    if (config_.api_key.empty())
        if (const char* key = std::getenv("RFSEARCH_API_KEY")) config_.api_key = key;
}

std::string HttpDesigner::complete(const PromptBundle& prompt, Rng&) {
    const std::string body = chat_request_body(prompt, config_.model, config_.temperature);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.transport_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        httplib::Client client(config_.endpoint);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());
        httplib::Headers headers;
        if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

        auto res = client.Post(config_.path, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = fmt::format("HTTP {}", res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError(fmt::format("designer endpoint answered HTTP {}: {}", res->status, res->body));
        return chat_response_content(res->body);
    }
    throw TransportError(
        fmt::format("designer endpoint failed after {} attempts: {}", config_.transport_retries + 1, last_error));
}

}  // namespace rfsearch
