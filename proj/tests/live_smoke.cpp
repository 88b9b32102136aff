// Optional live-provider smoke test: 1 topic, 1 trial, structural assertions
// only (non-error metrics in [0,1], the configured section count). Gated on
// SURVEYGEN_LIVE_SMOKE=1 plus provider settings; skipped (exit 77) otherwise.
//
//   SURVEYGEN_LIVE_SMOKE=1
//   SURVEYGEN_API_KEY=...
//   SURVEYGEN_LIVE_ENDPOINT=https://api.openai.com/v1
//   SURVEYGEN_LIVE_MODEL=gpt-4o-mini
//   SURVEYGEN_LIVE_EMBED_MODEL=text-embedding-3-small
//   SURVEYGEN_LIVE_EMBED_DIM=1536

#include <cstdlib>
#include <iostream>
#include <regex>
#include <string>

#include "fixtures.hpp"
#include "surveygen/pipeline.hpp"
#include "surveygen/util.hpp"

using namespace surveygen;
using testfix::TempDir;

namespace {

const char* env_or(const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return (v != nullptr && *v != '\0') ? v : fallback;
}

} // namespace

int main() {
    const char* gate = std::getenv("SURVEYGEN_LIVE_SMOKE");
    if (gate == nullptr || std::string(gate) != "1") {
        std::cout << "SKIP: set SURVEYGEN_LIVE_SMOKE=1 (plus SURVEYGEN_API_KEY and "
                     "SURVEYGEN_LIVE_* settings) to run the live smoke test\n";
        return 77;
    }
    if (std::getenv("SURVEYGEN_API_KEY") == nullptr) {
        std::cout << "SKIP: SURVEYGEN_API_KEY not set\n";
        return 77;
    }

    TempDir dir("live-smoke");
    Corpus corpus = testfix::synthetic_corpus(60);
    const auto corpus_path = dir.path() / "corpus.jsonl";
    write_jsonl(corpus, corpus_path);

    RunConfig cfg;
    cfg.topic = "retrieval augmented generation for language models";
    cfg.corpus_path = corpus_path;
    cfg.provider = "http";
    cfg.writer.endpoint = env_or("SURVEYGEN_LIVE_ENDPOINT", "https://api.openai.com/v1");
    cfg.writer.model = env_or("SURVEYGEN_LIVE_MODEL", "gpt-4o-mini");
    cfg.writer.embed_model = env_or("SURVEYGEN_LIVE_EMBED_MODEL", "text-embedding-3-small");
    cfg.writer.api_key = std::getenv("SURVEYGEN_API_KEY");
    cfg.embed_dim = static_cast<std::size_t>(std::atoi(env_or("SURVEYGEN_LIVE_EMBED_DIM", "1536")));
    cfg.n_trials = 1;
    cfg.section_count = 8;
    cfg.k_init = 40;
    cfg.k_sub = 6;
    cfg.word_target = 150; // keep the smoke test cheap
    cfg.output_dir = dir.path() / "out";

    try {
        const SurveyArtifact artifact = run(cfg, make_runtime(cfg));

        int failures = 0;
        auto expect = [&failures](bool ok, const char* what) {
            if (!ok) {
                ++failures;
                std::cerr << "FAIL  " << what << "\n";
            }
        };
        expect(artifact.citation.has_value(), "citation metrics computed without error");
        if (artifact.citation.has_value()) {
            expect(artifact.citation->recall >= 0.0 && artifact.citation->recall <= 1.0,
                   "recall in [0,1]");
            expect(artifact.citation->precision >= 0.0 && artifact.citation->precision <= 1.0,
                   "precision in [0,1]");
        }
        std::size_t sections = 0;
        static const std::regex section_re(R"(^## [0-9]+\. )");
        for (const std::string& line : split_lines(artifact.document.text)) {
            if (std::regex_search(line, section_re)) ++sections;
        }
        expect(sections == 8, "survey has 8 sections");

        if (failures > 0) return 1;
        std::cout << "live_smoke: ok (" << report(artifact) << ")\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "live smoke run failed: " << e.what() << "\n";
        return 1;
    }
}
