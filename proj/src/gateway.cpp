#include "surveygen/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "surveygen/corpus.hpp"
#include "surveygen/errors.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

void UsageLedger::record(const std::string& stage, std::int64_t prompt_tokens,
                         std::int64_t completion_tokens) {
    std::lock_guard<std::mutex> lock(mutex_);
    StageUsage& u = stages_[stage];
    u.prompt_tokens += prompt_tokens;
    u.completion_tokens += completion_tokens;
    u.calls += 1;
}

StageUsage UsageLedger::total() const {
    std::lock_guard<std::mutex> lock(mutex_);
    StageUsage total;
    for (const auto& [_, u] : stages_) {
        total.prompt_tokens += u.prompt_tokens;
        total.completion_tokens += u.completion_tokens;
        total.calls += u.calls;
    }
    return total;
}

std::map<std::string, StageUsage> UsageLedger::by_stage() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stages_;
}

void UsageLedger::reset() {
    std::lock_guard<std::mutex> lock(mutex_);
    stages_.clear();
}

double cost(const StageUsage& totals, const Pricing& price) {
    return static_cast<double>(totals.prompt_tokens) / 1000.0 * price.per_1k_input +
           static_cast<double>(totals.completion_tokens) / 1000.0 * price.per_1k_output;
}

double cost(const UsageLedger& ledger, const Pricing& price) {
    return cost(ledger.total(), price);
}

Gateway::Gateway(ProviderConfig cfg, std::shared_ptr<ChatTransport> transport,
                 std::shared_ptr<UsageLedger> ledger)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      ledger_(ledger ? std::move(ledger) : std::make_shared<UsageLedger>()),
      slots_(std::max(1, cfg_.max_concurrency)) {}

namespace {

class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<1 << 20>& sem) : sem_(sem) { sem_.acquire(); }
    ~SlotGuard() { sem_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1 << 20>& sem_;
};

void backoff_sleep(const RetryPolicy& retry, int attempt) {
    if (retry.base_backoff_seconds <= 0.0) return;
    const double cap = std::min(retry.max_backoff_seconds,
                                retry.base_backoff_seconds * std::pow(2.0, attempt - 1));
    // Full jitter: uniform in [0, cap]. The draw never feeds any output.
    thread_local std::mt19937_64 rng(std::random_device{}());
    const double frac = static_cast<double>(rng()) / static_cast<double>(std::uint64_t(-1));
    const auto delay = std::chrono::duration<double>(cap * frac);
    std::this_thread::sleep_for(delay);
}

} // namespace

template <typename Fn>
auto Gateway::with_retries(const std::string& what, Fn&& fn) -> decltype(fn(1)) {
    const int max_attempts = std::max(1, cfg_.retry.max_attempts);
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        try {
            return fn(attempt);
        } catch (const TransientError& e) {
            last_error = e.what();
            log_debug(what + " attempt " + std::to_string(attempt) + " failed: " + last_error);
            if (attempt < max_attempts) backoff_sleep(cfg_.retry, attempt);
        }
    }
    throw TransportError(what + " failed after " + std::to_string(max_attempts) +
                         " attempts: " + last_error);
}

ChatResponse Gateway::complete(const ChatRequest& req) {
    if (req.messages.empty()) {
        throw Error("complete: request has no messages");
    }
    ChatRequest effective = req;
    if (effective.model.empty()) effective.model = cfg_.model;
    if (cfg_.temperature_override.has_value()) effective.temperature = *cfg_.temperature_override;

    ChatResponse resp = with_retries("chat completion [" + req.stage + "]", [&](int attempt) {
        SlotGuard slot(slots_);
        ChatResponse r = transport_->send_chat(cfg_, effective);
        r.attempts = attempt;
        return r;
    });
    ledger_->record(req.stage, resp.prompt_tokens, resp.completion_tokens);
    return resp;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts,
                                            const std::string& stage) {
    if (texts.empty()) {
        throw Error("embed: texts must be non-empty");
    }
    auto vectors = with_retries("embedding [" + stage + "]", [&](int) {
        SlotGuard slot(slots_);
        return transport_->send_embed(cfg_, texts);
    });
    if (vectors.size() != texts.size()) {
        throw ProviderError("embedding provider returned " + std::to_string(vectors.size()) +
                            " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    std::int64_t input_tokens = 0;
    for (const auto& t : texts) input_tokens += estimate_tokens(t);
    ledger_->record(stage, input_tokens, 0);
    return vectors;
}

std::vector<EmbeddingVector> GatewayEmbedder::embed(const std::vector<std::string>& texts) {
    auto vectors = gateway_.embed(texts);
    for (const auto& v : vectors) {
        if (v.size() != dim_) {
            throw ProviderError("embedding dimension " + std::to_string(v.size()) +
                                " does not match configured " + std::to_string(dim_));
        }
    }
    return vectors;
}

} // namespace surveygen
