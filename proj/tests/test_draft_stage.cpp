#include <doctest.h>

#include "fixtures.hpp"
#include "surveygen/draft_stage.hpp"
#include "surveygen/errors.hpp"
#include "surveygen/mock_provider.hpp"

using namespace surveygen;

namespace {

struct Harness {
    Corpus corpus;
    HashEmbedder embedder{64};
    VectorIndex index;
    std::shared_ptr<MockTransport> mock;
    std::unique_ptr<Gateway> gateway;
    TemplateSet templates;

    explicit Harness(std::size_t n = 20, int max_concurrency = 8) {
        corpus = testfix::synthetic_corpus(n);
        index = build_index(corpus, embedder);
        mock = std::make_shared<MockTransport>(64);
        ProviderConfig cfg;
        cfg.max_concurrency = max_concurrency;
        cfg.retry.max_attempts = 2;
        cfg.retry.base_backoff_seconds = 0.0;
        gateway = std::make_unique<Gateway>(cfg, mock);
    }

    StageContext ctx(std::string topic = "synthetic retrieval systems") {
        return StageContext{std::move(topic), corpus, index, embedder, *gateway, templates};
    }
};

Outline grid_outline(int sections, int subsections) {
    Outline o;
    o.title = "Grid Survey";
    for (int s = 1; s <= sections; ++s) {
        Section sec{s, "Section " + std::to_string(s), "covers area " + std::to_string(s), {}};
        for (int m = 1; m <= subsections; ++m) {
            sec.subsections.push_back({m, "Topic " + std::to_string(s) + "-" + std::to_string(m),
                                       "details for " + std::to_string(s) + "-" +
                                           std::to_string(m)});
        }
        o.sections.push_back(std::move(sec));
    }
    return o;
}

} // namespace

TEST_CASE("plan_tasks: one task per subsection, 8x3 -> 24") {
    Harness h;
    Outline outline = grid_outline(8, 3);
    DraftParams params;
    params.k_sub = 5;
    auto tasks = plan_tasks(outline, h.ctx(), params);
    REQUIRE(tasks.size() == 24);
    CHECK(tasks[0].section_index == 1);
    CHECK(tasks[0].subsection_index == 1);
    CHECK(tasks[23].section_index == 8);
    CHECK(tasks[23].subsection_index == 3);
    for (const DraftTask& t : tasks) {
        CHECK(t.refs.size() == 5);
        CHECK(t.word_target == params.word_target);
    }
}

TEST_CASE("plan_tasks: identical descriptions retrieve identical refs") {
    Harness h;
    Outline o;
    o.title = "T";
    o.sections = {{1, "Same", "shared topic", {{1, "Sub", "identical description text"}}},
                  {2, "Same", "shared topic", {{1, "Sub", "identical description text"}}}};
    auto tasks = plan_tasks(o, h.ctx(), {});
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[0].refs == tasks[1].refs);
}

TEST_CASE("plan_tasks: k_sub = 0 drafts citation-free") {
    Harness h;
    DraftParams params;
    params.k_sub = 0;
    auto tasks = plan_tasks(grid_outline(1, 2), h.ctx(), params);
    for (const DraftTask& t : tasks) CHECK(t.refs.empty());
}

TEST_CASE("plan_tasks: excluded papers never appear in refs") {
    Harness h;
    h.corpus.exclude("p1");
    h.corpus.exclude("p2");
    auto tasks = plan_tasks(grid_outline(2, 2), h.ctx(), {});
    for (const DraftTask& t : tasks) {
        for (const std::string& id : t.refs) {
            CHECK(id != "p1");
            CHECK(id != "p2");
        }
    }
}

TEST_CASE("draft_subsection: scripted reply passes through verbatim") {
    Harness h;
    h.mock->script(stages::kDraft, "text [T1]");
    Outline outline = grid_outline(1, 1);
    auto tasks = plan_tasks(outline, h.ctx(), {});
    SubsectionDraft draft = draft_subsection(tasks[0], outline, h.ctx(), {});
    CHECK(draft.text == "text [T1]");
    CHECK(draft.task == tasks[0]);
}

TEST_CASE("draft_subsection: prompt carries the guideline, outline, and word target") {
    Harness h;
    Outline outline = grid_outline(2, 2);
    auto tasks = plan_tasks(outline, h.ctx(), {});
    (void)draft_subsection(tasks[0], outline, h.ctx(), {});

    const std::string prompt = h.mock->last_prompt_containing("write the content");
    REQUIRE(!prompt.empty());
    CHECK(prompt.find("Summarizing Research: Cite sources when summarizing") != std::string::npos);
    CHECK(prompt.find("more than 700 words") != std::string::npos);
    CHECK(prompt.find("Title: Grid Survey") != std::string::npos); // full outline serialized
    CHECK(prompt.find("\"Topic 1-1\"") != std::string::npos);
    CHECK(prompt.find("paper_title: ") != std::string::npos);
}

TEST_CASE("draft_subsection: empty-body papers fall back to the abstract in the prompt") {
    Harness h(6);
    // Fixture bodies are non-empty; build a corpus with no bodies instead.
    Corpus corpus;
    for (int i = 0; i < 4; ++i) {
        PaperRecord p;
        p.id = "nb" + std::to_string(i);
        p.title = "Bodyless paper " + std::to_string(i);
        p.abstract = "UNIQUEABSTRACT" + std::to_string(i) + " about retrieval systems.";
        corpus.add(std::move(p));
    }
    VectorIndex index = build_index(corpus, h.embedder);
    StageContext ctx{"retrieval systems", corpus, index, h.embedder, *h.gateway, h.templates};

    Outline outline = grid_outline(1, 1);
    auto tasks = plan_tasks(outline, ctx, {});
    REQUIRE(!tasks[0].refs.empty());
    (void)draft_subsection(tasks[0], outline, ctx, {});
    const std::string prompt = h.mock->last_prompt_containing("write the content");
    CHECK(prompt.find("UNIQUEABSTRACT") != std::string::npos);
}

TEST_CASE("draft_subsection: prompt overflow is a planning error") {
    Harness h;
    Outline outline = grid_outline(1, 1);
    auto tasks = plan_tasks(outline, h.ctx(), {});
    DraftParams params;
    params.context_budget = 10; // absurdly small
    CHECK_THROWS_AS(draft_subsection(tasks[0], outline, h.ctx(), params), StageError);
    CHECK(h.mock->chat_calls() == 0); // never reached the provider
}

TEST_CASE("draft_all: results in task order under parallel completion") {
    Harness h;
    h.mock->set_latency(std::chrono::milliseconds(1));
    Outline outline = grid_outline(4, 3);
    auto tasks = plan_tasks(outline, h.ctx(), {});
    auto drafts = draft_all(tasks, outline, h.ctx(), {});
    REQUIRE(drafts.size() == 12);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        CHECK(drafts[i].task == tasks[i]);
        // The filler echoes the subsection name into its reply.
        CHECK(drafts[i].text.find(tasks[i].subsection_name) != std::string::npos);
    }
}

TEST_CASE("draft_all: the gateway cap bounds in-flight drafting calls") {
    Harness h(20, /*max_concurrency=*/4);
    h.mock->set_latency(std::chrono::milliseconds(2));
    Outline outline = grid_outline(4, 3);
    auto tasks = plan_tasks(outline, h.ctx(), {});
    (void)draft_all(tasks, outline, h.ctx(), {});
    CHECK(h.mock->max_inflight() <= 4);
}

TEST_CASE("draft_all: permanent failure is aggregated with coordinates") {
    Harness h;
    // The writing prompt quotes the subsection name; fail that task for good.
    h.mock->fail_transient_when("\"Topic 2-1\"", 1000);
    Outline outline = grid_outline(2, 2);
    auto tasks = plan_tasks(outline, h.ctx(), {});
    CHECK_THROWS_WITH_AS(draft_all(tasks, outline, h.ctx(), {}), doctest::Contains("2.1"),
                         StageError);
}

TEST_CASE("draft_subsection: empty reply is an error") {
    Harness h;
    h.mock->script(stages::kDraft, "   ");
    Outline outline = grid_outline(1, 1);
    auto tasks = plan_tasks(outline, h.ctx(), {});
    CHECK_THROWS_AS(draft_subsection(tasks[0], outline, h.ctx(), {}), StageError);
}
