#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "surveygen/embedding.hpp"

namespace surveygen {

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string text;
};

struct ChatRequest {
    std::string model; // empty: use the provider config's model
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    int max_output_tokens = 0; // 0: provider default
    std::string stage = "default"; // ledger attribution + mock script key
};

struct ChatResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    int attempts = 1;
};

struct RetryPolicy {
    int max_attempts = 4;
    double base_backoff_seconds = 1.0;
    double max_backoff_seconds = 30.0;
};

struct Pricing {
    double per_1k_input = 0.0;
    double per_1k_output = 0.0;
};

struct ProviderConfig {
    std::string endpoint; // e.g. https://api.example.com/v1
    std::string model;
    std::string embed_model;
    std::string api_key;
    int max_concurrency = 8;
    RetryPolicy retry;
    Pricing price;
    std::string name = "provider"; // label used in reports
    /// When set, applied to every request this gateway sends.
    std::optional<double> temperature_override;
};

struct StageUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t calls = 0;

    bool operator==(const StageUsage&) const = default;
};

/// Thread-safe per-stage token accounting. Totals always equal the sum of the
/// recorded responses.
class UsageLedger {
public:
    void record(const std::string& stage, std::int64_t prompt_tokens,
                std::int64_t completion_tokens);

    StageUsage total() const;
    std::map<std::string, StageUsage> by_stage() const;
    void reset();

private:
    mutable std::mutex mutex_;
    std::map<std::string, StageUsage> stages_;
};

/// input/1000 * p_in + output/1000 * p_out.
double cost(const StageUsage& totals, const Pricing& price);
double cost(const UsageLedger& ledger, const Pricing& price);

/// Raw provider access; one call, no retries. Implementations throw
/// TransientError for retryable failures and ProviderError for refusals.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual ChatResponse send_chat(const ProviderConfig& cfg, const ChatRequest& req) = 0;
    virtual std::vector<EmbeddingVector> send_embed(const ProviderConfig& cfg,
                                                    const std::vector<std::string>& texts) = 0;
};

/// Chat + embedding access with exponential-backoff retries, a global
/// in-flight cap, and usage accounting. Shareable across threads.
class Gateway {
public:
    /// A null ledger means the gateway owns a private one; passing a shared
    /// ledger lets several gateways account into the same books.
    Gateway(ProviderConfig cfg, std::shared_ptr<ChatTransport> transport,
            std::shared_ptr<UsageLedger> ledger = nullptr);

    ChatResponse complete(const ChatRequest& req);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       const std::string& stage = "embed");

    const ProviderConfig& config() const { return cfg_; }
    UsageLedger& ledger() { return *ledger_; }
    const UsageLedger& ledger() const { return *ledger_; }

private:
    template <typename Fn>
    auto with_retries(const std::string& what, Fn&& fn) -> decltype(fn(1));

    ProviderConfig cfg_;
    std::shared_ptr<ChatTransport> transport_;
    std::shared_ptr<UsageLedger> ledger_;
    std::counting_semaphore<1 << 20> slots_;
};

/// Embedder backed by a gateway's embedding endpoint.
class GatewayEmbedder final : public Embedder {
public:
    GatewayEmbedder(Gateway& gateway, std::size_t dim) : gateway_(gateway), dim_(dim) {}

    std::size_t dim() const override { return dim_; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    Gateway& gateway_;
    std::size_t dim_;
};

/// HTTP transport speaking the OpenAI-compatible chat-completions/embeddings
/// JSON shape against {endpoint}/chat/completions and {endpoint}/embeddings.
std::shared_ptr<ChatTransport> make_http_transport();

} // namespace surveygen
