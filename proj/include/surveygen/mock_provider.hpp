#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "surveygen/embedding.hpp"
#include "surveygen/gateway.hpp"

namespace surveygen {

/// Offline provider for tests and deterministic runs.
///
/// Reply resolution order for a chat request:
///   1. injected failures (global, then content-matched)
///   2. per-stage FIFO script
///   3. content rules (first `when_contains` whose needle occurs in the prompt)
///   4. the deterministic template filler
/// Embeddings are served by an internal HashEmbedder, so identical texts give
/// identical vectors. Every reply is a pure function of the request, which
/// makes whole pipeline runs byte-deterministic.
class MockTransport final : public ChatTransport {
public:
    explicit MockTransport(std::size_t embed_dim = 64) : embedder_(embed_dim) {}

    // --- scripting -----------------------------------------------------------
    void script(const std::string& stage, std::string reply);
    void when_contains(std::string needle, std::string reply, int times = -1);
    /// Echo the text between the first "---" fence pair after `marker`.
    void echo_block_when(std::string needle, std::string marker, int times = -1);
    void fail_transient(int times) { global_failures_ += times; }
    void fail_transient_when(std::string needle, int times);
    void refuse_when(std::string needle, std::string body);
    void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

    // --- instrumentation -----------------------------------------------------
    int chat_calls() const;
    int max_inflight() const;
    /// Copies of every chat request seen, in arrival order.
    std::vector<ChatRequest> requests() const;
    /// Last request whose prompt contains the needle; empty string if none.
    std::string last_prompt_containing(const std::string& needle) const;

    // --- ChatTransport -------------------------------------------------------
    ChatResponse send_chat(const ProviderConfig& cfg, const ChatRequest& req) override;
    std::vector<EmbeddingVector> send_embed(const ProviderConfig& cfg,
                                            const std::vector<std::string>& texts) override;

private:
    struct Rule {
        std::string needle;
        std::string reply;
        std::string echo_marker; // when set, reply is the fenced block after it
        int remaining = -1;      // -1: unlimited
        bool refuse = false;
        int fail_times = 0;
    };

    std::string resolve_reply(const std::string& prompt, const std::string& stage);

    mutable std::mutex mutex_;
    std::map<std::string, std::deque<std::string>> stage_scripts_;
    std::vector<Rule> rules_;
    int global_failures_ = 0;
    std::chrono::milliseconds latency_{0};
    int calls_ = 0;
    int inflight_ = 0;
    int max_inflight_ = 0;
    std::vector<ChatRequest> seen_;
    HashEmbedder embedder_;
};

/// The filler behind the mock: recognizes each built-in prompt shape and
/// produces a structurally valid reply derived only from the request text.
std::string deterministic_fill(const std::string& prompt);

/// Concatenated text of all messages in the request (the "prompt" the mock
/// matches rules against).
std::string flatten_request(const ChatRequest& req);

} // namespace surveygen
