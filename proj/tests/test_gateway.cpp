#include <doctest.h>

#include <cmath>
#include <thread>

#include "fixtures.hpp"
#include "surveygen/errors.hpp"
#include "surveygen/gateway.hpp"
#include "surveygen/mock_provider.hpp"

using namespace surveygen;

namespace {

ProviderConfig fast_config(int max_attempts = 4, int max_concurrency = 8) {
    ProviderConfig cfg;
    cfg.model = "mock-model";
    cfg.max_concurrency = max_concurrency;
    cfg.retry.max_attempts = max_attempts;
    cfg.retry.base_backoff_seconds = 0.0; // no sleeping in tests
    return cfg;
}

ChatRequest simple_request(const std::string& text, const std::string& stage = "default") {
    ChatRequest req;
    req.stage = stage;
    req.messages.push_back({"user", text});
    return req;
}

} // namespace

TEST_CASE("mock script: request containing X answers Y") {
    auto mock = std::make_shared<MockTransport>();
    mock->when_contains("X marks the spot", "Y");
    Gateway gateway(fast_config(), mock);
    CHECK(gateway.complete(simple_request("please X marks the spot now")).text == "Y");
}

TEST_CASE("per-stage scripts are consumed in order") {
    auto mock = std::make_shared<MockTransport>();
    mock->script("draft", "first");
    mock->script("draft", "second");
    Gateway gateway(fast_config(), mock);
    CHECK(gateway.complete(simple_request("a", "draft")).text == "first");
    CHECK(gateway.complete(simple_request("a", "draft")).text == "second");
}

TEST_CASE("retries: three transient failures then success with max_attempts=4") {
    auto mock = std::make_shared<MockTransport>();
    mock->fail_transient(3);
    mock->when_contains("hello", "world");
    Gateway gateway(fast_config(4), mock);
    ChatResponse resp = gateway.complete(simple_request("hello"));
    CHECK(resp.text == "world");
    CHECK(resp.attempts == 4);
    CHECK(mock->chat_calls() == 4);
}

TEST_CASE("retries: exhausted attempts raise TransportError") {
    auto mock = std::make_shared<MockTransport>();
    mock->fail_transient(2);
    Gateway gateway(fast_config(2), mock);
    CHECK_THROWS_AS(gateway.complete(simple_request("hello")), TransportError);
    CHECK(mock->chat_calls() == 2);
}

TEST_CASE("provider refusal is not retried and carries the body") {
    auto mock = std::make_shared<MockTransport>();
    mock->refuse_when("forbidden", "policy: request refused");
    Gateway gateway(fast_config(4), mock);
    CHECK_THROWS_WITH_AS(gateway.complete(simple_request("forbidden please")),
                         doctest::Contains("policy: request refused"), ProviderError);
    CHECK(mock->chat_calls() == 1);
}

TEST_CASE("empty request is rejected") {
    auto mock = std::make_shared<MockTransport>();
    Gateway gateway(fast_config(), mock);
    ChatRequest req;
    CHECK_THROWS_AS(gateway.complete(req), Error);
}

TEST_CASE("in-flight requests never exceed max_concurrency") {
    auto mock = std::make_shared<MockTransport>();
    mock->set_latency(std::chrono::milliseconds(3));
    Gateway gateway(fast_config(4, /*max_concurrency=*/4), mock);

    std::vector<std::thread> threads;
    for (int i = 0; i < 16; ++i) {
        threads.emplace_back([&gateway, i] {
            (void)gateway.complete(simple_request("req " + std::to_string(i)));
        });
    }
    for (auto& t : threads) t.join();
    CHECK(mock->chat_calls() == 16);
    CHECK(mock->max_inflight() <= 4);
}

TEST_CASE("ledger: totals equal the sum of recorded responses, per stage") {
    auto mock = std::make_shared<MockTransport>();
    mock->when_contains("q", "reply text");
    Gateway gateway(fast_config(), mock);

    std::int64_t expect_prompt = 0, expect_completion = 0;
    for (int i = 0; i < 5; ++i) {
        const std::string stage = i % 2 == 0 ? "draft" : "judge.rubric";
        ChatResponse r = gateway.complete(simple_request("q " + std::string(i, 'x'), stage));
        expect_prompt += r.prompt_tokens;
        expect_completion += r.completion_tokens;
    }
    const StageUsage total = gateway.ledger().total();
    CHECK(total.prompt_tokens == expect_prompt);
    CHECK(total.completion_tokens == expect_completion);
    CHECK(total.calls == 5);

    auto stages = gateway.ledger().by_stage();
    CHECK(stages.at("draft").calls == 3);
    CHECK(stages.at("judge.rubric").calls == 2);
    std::int64_t sum = 0;
    for (const auto& [_, u] : stages) sum += u.prompt_tokens;
    CHECK(sum == total.prompt_tokens);
}

TEST_CASE("cost arithmetic") {
    StageUsage none;
    CHECK(cost(none, {0.25, 1.25}) == 0.0);

    StageUsage both{1000, 1000, 2};
    CHECK(cost(both, {0.25, 1.25}) == doctest::Approx(1.50));

    // 3009.7k input + 112.9k output tokens at per-1k haiku pricing.
    StageUsage paper{3009700, 112900, 1};
    CHECK(cost(paper, {0.00025, 0.00125}) == doctest::Approx(0.89).epsilon(0.01));
}

TEST_CASE("embed: one unit vector per text, deterministic, order-preserving") {
    auto mock = std::make_shared<MockTransport>(32);
    Gateway gateway(fast_config(), mock);

    auto vecs = gateway.embed({"a", "b"});
    REQUIRE(vecs.size() == 2);
    CHECK(std::abs(l2_norm(vecs[0]) - 1.0f) < 1e-6f);
    CHECK(std::abs(l2_norm(vecs[1]) - 1.0f) < 1e-6f);

    auto again = gateway.embed({"a", "b"});
    CHECK(vecs == again);
    CHECK(vecs[0] != vecs[1]);

    CHECK_THROWS_AS(gateway.embed({}), Error);

    GatewayEmbedder embedder(gateway, 32);
    CHECK(embedder.dim() == 32);
    CHECK(embedder.embed({"a"})[0] == vecs[0]);
    GatewayEmbedder wrong_dim(gateway, 64);
    CHECK_THROWS_AS(wrong_dim.embed({"a"}), ProviderError);
}

TEST_CASE("shared ledger accounts across gateways") {
    auto mock = std::make_shared<MockTransport>();
    mock->when_contains("q", "r");
    auto ledger = std::make_shared<UsageLedger>();
    Gateway g1(fast_config(), mock, ledger);
    Gateway g2(fast_config(), mock, ledger);
    g1.complete(simple_request("q", "draft"));
    g2.complete(simple_request("q", "judge.rubric"));
    CHECK(ledger->total().calls == 2);
    CHECK(&g1.ledger() == &g2.ledger());
}

TEST_CASE("temperature override reaches the transport") {
    auto mock = std::make_shared<MockTransport>();
    mock->when_contains("q", "r");
    ProviderConfig cfg = fast_config();
    cfg.temperature_override = 0.25;
    Gateway gateway(cfg, mock);
    gateway.complete(simple_request("q"));
    auto seen = mock->requests();
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].temperature == doctest::Approx(0.25));
}

TEST_CASE("deterministic filler answers unknown prompts stably") {
    CHECK(deterministic_fill("opaque prompt") == deterministic_fill("opaque prompt"));
    CHECK(deterministic_fill("opaque prompt") != deterministic_fill("different prompt"));
}
