#include <memory>
#include <string>

#ifdef SURVEYGEN_HAS_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "surveygen/errors.hpp"
#include "surveygen/gateway.hpp"

namespace surveygen {

namespace {

using json = nlohmann::json;

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string base_path;
};

SplitUrl split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ProviderError("endpoint must include a scheme: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {endpoint, ""};
    }
    std::string path = endpoint.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {endpoint.substr(0, path_start), path};
}

bool is_transient_status(int status) {
    return status == 429 || status == 408 || (status >= 500 && status < 600);
}

class HttpTransport final : public ChatTransport {
public:
    ChatResponse send_chat(const ProviderConfig& cfg, const ChatRequest& req) override {
        json body;
        body["model"] = req.model.empty() ? cfg.model : req.model;
        body["temperature"] = req.temperature;
        if (req.max_output_tokens > 0) body["max_tokens"] = req.max_output_tokens;
        json messages = json::array();
        for (const ChatMessage& m : req.messages) {
            messages.push_back({{"role", m.role}, {"content", m.text}});
        }
        body["messages"] = std::move(messages);

        json reply = post_json(cfg, "/chat/completions", body);
        ChatResponse resp;
        try {
            resp.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw ProviderError(std::string("malformed chat completion reply: ") + e.what() +
                                "; body: " + reply.dump().substr(0, 512));
        }
        if (reply.contains("usage")) {
            const json& usage = reply["usage"];
            resp.prompt_tokens = usage.value("prompt_tokens", 0);
            resp.completion_tokens = usage.value("completion_tokens", 0);
        }
        return resp;
    }

    std::vector<EmbeddingVector> send_embed(const ProviderConfig& cfg,
                                            const std::vector<std::string>& texts) override {
        json body;
        body["model"] = cfg.embed_model.empty() ? cfg.model : cfg.embed_model;
        body["input"] = texts;

        json reply = post_json(cfg, "/embeddings", body);
        std::vector<EmbeddingVector> out;
        try {
            for (const json& item : reply.at("data")) {
                out.push_back(item.at("embedding").get<EmbeddingVector>());
            }
        } catch (const json::exception& e) {
            throw ProviderError(std::string("malformed embeddings reply: ") + e.what());
        }
        return out;
    }

private:
    json post_json(const ProviderConfig& cfg, const std::string& route, const json& body) {
        SplitUrl url = split_endpoint(cfg.endpoint);
        httplib::Client client(url.origin);
        client.set_connection_timeout(20, 0);
        client.set_read_timeout(300, 0);
        httplib::Headers headers;
        if (!cfg.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + cfg.api_key);
        }

        auto result = client.Post(url.base_path + route, headers, body.dump(),
                                  "application/json");
        if (!result) {
            throw TransientError("connection failed: " + httplib::to_string(result.error()));
        }
        if (result->status < 200 || result->status >= 300) {
            const std::string detail = "HTTP " + std::to_string(result->status) + ": " +
                                       result->body.substr(0, 1024);
            if (is_transient_status(result->status)) throw TransientError(detail);
            throw ProviderError(detail);
        }
        try {
            return json::parse(result->body);
        } catch (const json::parse_error& e) {
            throw ProviderError(std::string("provider returned non-JSON body: ") + e.what());
        }
    }
};

} // namespace

std::shared_ptr<ChatTransport> make_http_transport() {
    return std::make_shared<HttpTransport>();
}

} // namespace surveygen
