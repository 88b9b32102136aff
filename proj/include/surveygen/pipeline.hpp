#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "surveygen/document.hpp"
#include "surveygen/eval.hpp"
#include "surveygen/gateway.hpp"

namespace surveygen {

struct RunConfig {
    std::string topic;
    std::filesystem::path corpus_path;
    std::filesystem::path index_path; // empty: build in memory; set+missing: build and save

    std::string provider = "mock"; // "mock" | "http"
    ProviderConfig writer;
    std::vector<ProviderConfig> judges; // empty: one judge sharing the writer config
    std::size_t embed_dim = 256;

    int n_trials = 2;
    int section_count = 8;
    std::int64_t window_budget = 30000;
    int k_init = 1200;
    int k_sub = 60;
    std::int64_t body_budget = 1500;
    int word_target = 700;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    float resolve_threshold = 0.5f;
    std::vector<std::string> exclusions;

    std::int64_t length_target = 8000; // baseline mode only

    std::filesystem::path output_dir = "out";
    std::optional<std::filesystem::path> templates_dir;
};

/// Transports behind the run; tests plug scripted mocks in here.
struct Runtime {
    std::shared_ptr<ChatTransport> writer;
    std::shared_ptr<ChatTransport> embedder;
    std::vector<std::shared_ptr<ChatTransport>> judges; // matched to config.judges by index
};

/// One shared MockTransport for writer, embeddings, and judges.
Runtime make_mock_runtime(std::size_t embed_dim = 256);
Runtime make_http_runtime(std::size_t judge_count);
Runtime make_runtime(const RunConfig& config);

struct SurveyArtifact {
    SurveyDocument document;
    std::size_t selected_index = 0; // 0-based candidate index
    int selected_trial = 1;         // 1-based trial number
    RubricScores rubric;
    std::optional<CitationScores> citation;

    std::string report_json;
    std::string usage_json;
    StageUsage totals;
    double cost_usd = 0.0;
    double duration_seconds = 0.0;
    double speed_per_hour = 0.0;
    std::filesystem::path output_directory; // where survey.md/report.json/usage.json landed
};

/// Runs N independent trials of phases 1-3 (trial t shuffles with seed + t),
/// evaluates every candidate, keeps the best, and writes survey.md,
/// report.json and usage.json under output_dir/{timestamp}-{topic-slug}.
/// A trial's hard failure drops that trial; the run fails only when every
/// trial failed.
SurveyArtifact run(const RunConfig& config, const Runtime& runtime);

/// Naive mode: one seeded prompt, then continuation calls carrying the last
/// 3000 tokens of output, until the writer signals completion with the
/// END_OF_SURVEY marker or the output reaches length_target tokens. Three
/// consecutive empty replies abort. The same resolver and evaluator apply.
SurveyArtifact run_baseline(const RunConfig& config, const Runtime& runtime);

/// Human-readable metric summary (recall/precision, rubric table, tokens,
/// cost, speed). Pure function of the artifact.
std::string report(const SurveyArtifact& artifact);

/// Re-evaluates an existing survey.md against a corpus: parses its References
/// section, maps entries back to corpus ids, judges claims and rubric scores.
SurveyArtifact evaluate_survey(const RunConfig& config, const Runtime& runtime,
                               const std::filesystem::path& survey_path);

inline constexpr const char* kBaselineEndMarker = "END_OF_SURVEY";

} // namespace surveygen
