#include "surveygen/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "surveygen/citations.hpp"
#include "surveygen/draft_stage.hpp"
#include "surveygen/errors.hpp"
#include "surveygen/mock_provider.hpp"
#include "surveygen/outline_stage.hpp"
#include "surveygen/refine_stage.hpp"
#include "surveygen/stage_context.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

using json = nlohmann::json;

// =============================================================================
// Runtimes
// =============================================================================

Runtime make_mock_runtime(std::size_t embed_dim) {
    auto mock = std::make_shared<MockTransport>(embed_dim);
    return {mock, mock, {mock}};
}

Runtime make_http_runtime(std::size_t judge_count) {
    Runtime rt;
    rt.writer = make_http_transport();
    rt.embedder = rt.writer;
    for (std::size_t i = 0; i < judge_count; ++i) rt.judges.push_back(rt.writer);
    return rt;
}

namespace {

std::vector<ProviderConfig> effective_judges(const RunConfig& config) {
    std::vector<ProviderConfig> judges = config.judges;
    if (judges.empty()) {
        ProviderConfig j = config.writer;
        j.name = "judge-1";
        judges.push_back(std::move(j));
    }
    for (std::size_t i = 0; i < judges.size(); ++i) {
        if (judges[i].name.empty() || judges[i].name == "provider") {
            judges[i].name = "judge-" + std::to_string(i + 1);
        }
    }
    return judges;
}

} // namespace

Runtime make_runtime(const RunConfig& config) {
    if (config.provider == "mock") return make_mock_runtime(config.embed_dim);
    if (config.provider == "http") return make_http_runtime(effective_judges(config).size());
    throw Error("unknown provider kind '" + config.provider + "' (expected mock or http)");
}

// =============================================================================
// World setup shared by run / baseline / evaluate
// =============================================================================

namespace {

struct World {
    Corpus corpus;
    VectorIndex index;
    std::shared_ptr<UsageLedger> ledger;
    std::unique_ptr<Gateway> writer;
    std::unique_ptr<Gateway> embed_gateway;
    std::unique_ptr<Embedder> embedder;
    std::vector<std::unique_ptr<Gateway>> judges;
    std::vector<std::string> judge_names;
    TemplateSet templates;
};

World load_world(const RunConfig& config, const Runtime& runtime) {
    if (config.n_trials < 1) throw Error("n_trials must be >= 1");
    if (!runtime.writer || !runtime.embedder) throw Error("runtime transports not set");

    World w;
    w.corpus = ingest_jsonl(config.corpus_path);
    for (const std::string& id : config.exclusions) w.corpus.exclude(id);

    w.ledger = std::make_shared<UsageLedger>();

    ProviderConfig writer_cfg = config.writer;
    if (writer_cfg.name.empty() || writer_cfg.name == "provider") writer_cfg.name = "writer";
    if (config.temperature != 1.0) writer_cfg.temperature_override = config.temperature;
    w.writer = std::make_unique<Gateway>(writer_cfg, runtime.writer, w.ledger);
    w.embed_gateway = std::make_unique<Gateway>(writer_cfg, runtime.embedder, w.ledger);
    w.embedder = std::make_unique<GatewayEmbedder>(*w.embed_gateway, config.embed_dim);

    auto judge_cfgs = effective_judges(config);
    for (std::size_t i = 0; i < judge_cfgs.size(); ++i) {
        auto transport = i < runtime.judges.size() ? runtime.judges[i] : runtime.writer;
        w.judges.push_back(std::make_unique<Gateway>(judge_cfgs[i], transport, w.ledger));
        w.judge_names.push_back(judge_cfgs[i].name);
    }

    if (!config.index_path.empty() && std::filesystem::exists(config.index_path)) {
        w.index = load_index(config.index_path, config.embed_dim);
    } else {
        w.index = build_index(w.corpus, *w.embedder);
        if (!config.index_path.empty()) save_index(w.index, config.index_path);
    }

    w.templates = TemplateSet(config.templates_dir);
    return w;
}

// =============================================================================
// Candidate evaluation
// =============================================================================

struct ClaimVerdict {
    Claim claim;
    bool supported = false;
};

struct CandidateReport {
    int trial = 0;
    SurveyDocument document;
    std::vector<ClaimVerdict> verdicts;
    std::optional<CitationScores> citation;
    std::string citation_error;
    std::vector<RubricScores> per_judge;
    RubricScores aggregate;
};

CandidateReport evaluate_candidate(int trial, SurveyDocument document, World& world,
                                   const RunConfig& config) {
    CandidateReport report;
    report.trial = trial;
    report.document = std::move(document);

    const auto claims = extract_claims(report.document);
    SupportJudge judge =
        memoize_judge(make_llm_support_judge(*world.judges.front(), world.corpus,
                                             config.body_budget));
    for (const Claim& claim : claims) {
        report.verdicts.push_back({claim, judge(claim, claim.refs)});
    }
    try {
        CitationScores scores;
        scores.claim_count = static_cast<std::int64_t>(claims.size());
        for (const Claim& c : claims) {
            scores.citation_pair_count += static_cast<std::int64_t>(c.refs.size());
        }
        scores.recall = citation_recall(claims, judge);
        scores.precision = citation_precision(claims, judge);
        report.citation = scores;
    } catch (const MetricError& e) {
        report.citation_error = e.what();
        log_warn("trial " + std::to_string(trial) + ": " + e.what());
    }

    for (auto& judge_gateway : world.judges) {
        RubricScores s;
        s.coverage = score_rubric(report.document.text, RubricCriterion::kCoverage, *judge_gateway);
        s.structure =
            score_rubric(report.document.text, RubricCriterion::kStructure, *judge_gateway);
        s.relevance =
            score_rubric(report.document.text, RubricCriterion::kRelevance, *judge_gateway);
        report.per_judge.push_back(s);
    }
    report.aggregate = aggregate_judges(report.per_judge);
    return report;
}

// =============================================================================
// Report and output serialization
// =============================================================================

json rubric_json(const RubricScores& s) {
    return json{{"coverage", s.coverage},
                {"structure", s.structure},
                {"relevance", s.relevance},
                {"overall", s.overall()}};
}

json candidate_json(const CandidateReport& c, const World& world) {
    json claims = json::array();
    for (const ClaimVerdict& v : c.verdicts) {
        claims.push_back({{"sentence", v.claim.sentence},
                          {"refs", v.claim.refs},
                          {"supported", v.supported}});
    }
    json per_judge = json::array();
    for (std::size_t j = 0; j < c.per_judge.size(); ++j) {
        json entry = rubric_json(c.per_judge[j]);
        entry["judge"] = world.judge_names[j];
        per_judge.push_back(std::move(entry));
    }
    json bibliography = json::array();
    const auto& ids = c.document.bibliography.ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const PaperRecord* rec = world.corpus.find(ids[i]);
        bibliography.push_back({{"number", i + 1},
                                {"id", ids[i]},
                                {"title", rec != nullptr ? rec->title : ids[i]}});
    }

    json out;
    out["trial"] = c.trial;
    out["title"] = c.document.title;
    out["claims"] = std::move(claims);
    if (c.citation.has_value()) {
        out["citation"] = {{"recall", c.citation->recall},
                           {"precision", c.citation->precision},
                           {"claim_count", c.citation->claim_count},
                           {"citation_pair_count", c.citation->citation_pair_count}};
    } else {
        out["citation"] = nullptr;
        out["citation_error"] = c.citation_error;
    }
    out["rubric"] = {{"per_judge", std::move(per_judge)}, {"aggregate", rubric_json(c.aggregate)}};
    out["bibliography"] = std::move(bibliography);
    return out;
}

std::string build_report_json(const std::string& topic, const std::vector<CandidateReport>& cands,
                              std::size_t selected, const World& world) {
    json out;
    out["schema_version"] = 1;
    out["topic"] = topic;
    out["selected_index"] = selected;
    out["selected_trial"] = cands[selected].trial;
    json arr = json::array();
    for (const CandidateReport& c : cands) arr.push_back(candidate_json(c, world));
    out["candidates"] = std::move(arr);
    return out.dump(2) + "\n";
}

std::string build_usage_json(const UsageLedger& ledger, const Pricing& price,
                             double duration_seconds, double speed_per_hour) {
    json stages_json;
    for (const auto& [stage, u] : ledger.by_stage()) {
        stages_json[stage] = {{"prompt_tokens", u.prompt_tokens},
                              {"completion_tokens", u.completion_tokens},
                              {"calls", u.calls}};
    }
    const StageUsage totals = ledger.total();
    json out;
    out["schema_version"] = 1;
    out["stages"] = std::move(stages_json);
    out["totals"] = {{"prompt_tokens", totals.prompt_tokens},
                     {"completion_tokens", totals.completion_tokens},
                     {"calls", totals.calls}};
    out["cost_usd"] = cost(totals, price);
    out["duration_seconds"] = duration_seconds;
    out["speed_surveys_per_hour"] = speed_per_hour;
    return out.dump(2) + "\n";
}

std::filesystem::path unique_output_dir(const RunConfig& config) {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);

    const std::string base = std::string(stamp) + "-" + slugify(config.topic);
    std::filesystem::path dir = config.output_dir / base;
    for (int i = 2; std::filesystem::exists(dir); ++i) {
        dir = config.output_dir / (base + "-" + std::to_string(i));
    }
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

SurveyArtifact finish_artifact(const RunConfig& config, World& world,
                               std::vector<CandidateReport> candidates, std::size_t selected,
                               std::chrono::steady_clock::time_point started, bool write_survey) {
    SurveyArtifact artifact;
    artifact.document = std::move(candidates[selected].document);
    artifact.selected_index = selected;
    artifact.selected_trial = candidates[selected].trial;
    artifact.rubric = candidates[selected].aggregate;
    artifact.citation = candidates[selected].citation;

    candidates[selected].document = artifact.document; // keep report content intact
    artifact.report_json = build_report_json(config.topic, candidates, selected, world);

    const auto elapsed = std::chrono::steady_clock::now() - started;
    artifact.duration_seconds = std::chrono::duration<double>(elapsed).count();
    const double hours = artifact.duration_seconds / 3600.0;
    artifact.speed_per_hour = hours > 0.0 ? 1.0 / hours : 0.0;
    artifact.totals = world.ledger->total();
    artifact.cost_usd = cost(artifact.totals, config.writer.price);
    artifact.usage_json = build_usage_json(*world.ledger, config.writer.price,
                                           artifact.duration_seconds, artifact.speed_per_hour);

    if (write_survey) {
        artifact.output_directory = unique_output_dir(config);
        std::string text = artifact.document.text;
        if (text.empty() || text.back() != '\n') text += '\n';
        write_file(artifact.output_directory / "survey.md", text);
        write_file(artifact.output_directory / "report.json", artifact.report_json);
        write_file(artifact.output_directory / "usage.json", artifact.usage_json);
    }
    return artifact;
}

} // namespace

// =============================================================================
// run
// =============================================================================

SurveyArtifact run(const RunConfig& config, const Runtime& runtime) {
    const auto started = std::chrono::steady_clock::now();
    World world = load_world(config, runtime);

    std::vector<CandidateReport> candidates;
    std::vector<std::string> failures;
    for (int t = 1; t <= config.n_trials; ++t) {
        try {
            StageContext ctx{config.topic,   world.corpus, world.index,
                             *world.embedder, *world.writer, world.templates};

            OutlineParams outline_params;
            outline_params.k_init = config.k_init;
            outline_params.window_budget = config.window_budget;
            outline_params.section_count = config.section_count;
            outline_params.k_enrich = config.k_sub;
            outline_params.seed = config.seed + static_cast<std::uint64_t>(t);
            Outline outline = generate_outline(ctx, outline_params);

            DraftParams draft_params;
            draft_params.k_sub = config.k_sub;
            draft_params.body_budget = config.body_budget;
            draft_params.word_target = config.word_target;
            auto tasks = plan_tasks(outline, ctx, draft_params);
            auto drafts = draft_all(tasks, outline, ctx, draft_params);

            RefineParams refine_params;
            refine_params.body_budget = config.body_budget;
            auto reflected = reflect_all(drafts, ctx, refine_params);
            auto polished = polish_all(reflected, ctx);

            SurveyDocument merged = merge_document(outline, polished);
            SurveyDocument resolved = resolve_document(merged, world.index, *world.embedder,
                                                       world.corpus, config.resolve_threshold);

            candidates.push_back(
                evaluate_candidate(t, std::move(resolved), world, config));
        } catch (const std::exception& e) {
            log_error("trial " + std::to_string(t) + " failed: " + e.what());
            failures.push_back("trial " + std::to_string(t) + ": " + e.what());
        }
    }
    if (candidates.empty()) {
        std::string joined;
        for (const std::string& f : failures) {
            if (!joined.empty()) joined += "; ";
            joined += f;
        }
        throw StageError("all trials failed: " + joined);
    }

    std::vector<CandidateScores> scores;
    scores.reserve(candidates.size());
    for (const CandidateReport& c : candidates) scores.push_back({c.aggregate, c.citation});
    const std::size_t selected = select_best(scores);

    return finish_artifact(config, world, std::move(candidates), selected, started, true);
}

// =============================================================================
// Baseline mode
// =============================================================================

namespace {

std::string baseline_paper_list(const RunConfig& config, World& world) {
    auto hits = retrieve(world.index, *world.embedder, config.topic,
                         static_cast<std::size_t>(std::max(0, config.k_sub)),
                         IndexNamespace::kAbstract, world.corpus.exclusions());
    std::vector<const PaperRecord*> records;
    for (const ScoredId& s : hits) {
        const PaperRecord* rec = world.corpus.find(s.id);
        if (rec != nullptr) records.push_back(rec);
    }
    return render_paper_list(records, PaperField::kAbstract, config.window_budget);
}

std::string baseline_prompt(const RunConfig& config, const std::string& paper_list,
                            const std::string& tail) {
    std::string prompt;
    if (tail.empty()) {
        prompt += "You are writing a comprehensive academic survey about " + config.topic + ".\n";
    } else {
        prompt += "You are continuing an academic survey about " + config.topic + ".\n";
    }
    prompt += "Reference papers:\n---\n" + paper_list + "\n---\n";
    if (!tail.empty()) {
        prompt += "The survey so far ends with:\n---\n" + tail + "\n---\n";
        prompt += "Continue writing from exactly where it ends.\n";
    } else {
        prompt += "Write the survey in markdown, starting now.\n";
    }
    prompt += "The whole survey should reach about " + std::to_string(config.length_target) +
              " tokens. When writing sentences based on the papers above, cite the "
              "\"paper_title\" in a '[]' format. When the survey is fully complete, write the "
              "line " + std::string(kBaselineEndMarker) + ".";
    return prompt;
}

} // namespace

SurveyArtifact run_baseline(const RunConfig& config, const Runtime& runtime) {
    const auto started = std::chrono::steady_clock::now();
    if (config.length_target <= 0) throw Error("baseline mode needs a positive length_target");
    World world = load_world(config, runtime);

    const std::string paper_list = baseline_paper_list(config, world);
    std::string accumulated;
    int no_progress = 0;
    bool complete = false;
    while (!complete && estimate_tokens(accumulated) < config.length_target) {
        const std::string tail =
            accumulated.empty()
                ? std::string{}
                : accumulated.substr(accumulated.size() -
                                     std::min<std::size_t>(accumulated.size(), 3000 * 4));
        ChatRequest req;
        req.stage = stages::kBaseline;
        req.messages.push_back({"user", baseline_prompt(config, paper_list, tail)});
        std::string reply = world.writer->complete(req).text;

        const auto marker = reply.find(kBaselineEndMarker);
        if (marker != std::string::npos) {
            reply = reply.substr(0, marker);
            complete = true;
        }
        if (trim(reply).empty()) {
            if (++no_progress >= 3) {
                throw StageError("baseline made no progress across 3 consecutive iterations");
            }
            continue;
        }
        no_progress = 0;
        if (!accumulated.empty()) accumulated += "\n\n";
        accumulated += trim(reply);
    }

    SurveyDocument document;
    document.title = config.topic;
    document.text = "# " + config.topic + "\n\n" + accumulated + "\n";
    SurveyDocument resolved = resolve_document(document, world.index, *world.embedder,
                                               world.corpus, config.resolve_threshold);

    std::vector<CandidateReport> candidates;
    candidates.push_back(evaluate_candidate(1, std::move(resolved), world, config));
    return finish_artifact(config, world, std::move(candidates), 0, started, true);
}

// =============================================================================
// report
// =============================================================================

std::string report(const SurveyArtifact& artifact) {
    char buf[256];
    std::string out;
    out += "Survey: " + artifact.document.title + "\n";
    out += "Selected trial: " + std::to_string(artifact.selected_trial) + "\n";
    if (artifact.citation.has_value()) {
        std::snprintf(buf, sizeof(buf),
                      "Citation quality: recall %.2f%%  precision %.2f%%  (claims %lld, pairs %lld)\n",
                      artifact.citation->recall * 100.0, artifact.citation->precision * 100.0,
                      static_cast<long long>(artifact.citation->claim_count),
                      static_cast<long long>(artifact.citation->citation_pair_count));
        out += buf;
    } else {
        out += "Citation quality: undefined (no claims)\n";
    }
    std::snprintf(buf, sizeof(buf),
                  "Content quality:  coverage %.2f  structure %.2f  relevance %.2f  overall %.2f\n",
                  artifact.rubric.coverage, artifact.rubric.structure, artifact.rubric.relevance,
                  artifact.rubric.overall());
    out += buf;
    std::snprintf(buf, sizeof(buf), "Tokens: %lld in / %lld out across %lld calls\n",
                  static_cast<long long>(artifact.totals.prompt_tokens),
                  static_cast<long long>(artifact.totals.completion_tokens),
                  static_cast<long long>(artifact.totals.calls));
    out += buf;
    std::snprintf(buf, sizeof(buf), "Cost: $%.2f\n", artifact.cost_usd);
    out += buf;
    std::snprintf(buf, sizeof(buf), "Time: %.1f s  (speed %.2f surveys/hour)\n",
                  artifact.duration_seconds, artifact.speed_per_hour);
    out += buf;
    return out;
}

// =============================================================================
// evaluate_survey
// =============================================================================

SurveyArtifact evaluate_survey(const RunConfig& config, const Runtime& runtime,
                               const std::filesystem::path& survey_path) {
    const auto started = std::chrono::steady_clock::now();
    World world = load_world(config, runtime);

    std::ifstream in(survey_path, std::ios::binary);
    if (!in) throw IoError("cannot open survey: " + survey_path.string());
    std::ostringstream buf;
    buf << in.rdbuf();

    SurveyDocument document;
    document.text = buf.str();
    for (const std::string& line : split_lines(document.text)) {
        if (line.rfind("# ", 0) == 0) {
            document.title = trim(line.substr(2));
            break;
        }
    }

    // Rebuild the bibliography from the References section, mapping titles
    // back to corpus ids (exact title first, then nearest title embedding).
    auto refs_pos = document.text.find("\n## References");
    if (refs_pos != std::string::npos) {
        std::vector<std::pair<int, std::string>> entries; // number, title
        for (const std::string& line : split_lines(document.text.substr(refs_pos))) {
            const std::string t = trim(line);
            if (t.size() < 4 || t[0] != '[') continue;
            const auto close = t.find(']');
            if (close == std::string::npos) continue;
            const std::string num = t.substr(1, close - 1);
            if (num.empty() || num.size() > 9 ||
                !std::all_of(num.begin(), num.end(), [](char c) {
                    return std::isdigit(static_cast<unsigned char>(c));
                })) {
                continue;
            }
            entries.emplace_back(std::stoi(num), trim(t.substr(close + 1)));
        }
        std::sort(entries.begin(), entries.end());
        int expected = 1;
        for (const auto& [number, title] : entries) {
            while (expected < number) {
                document.bibliography.add("missing-" + std::to_string(expected));
                ++expected;
            }
            std::string id;
            for (const PaperRecord& rec : world.corpus.records()) {
                if (rec.title == title) {
                    id = rec.id;
                    break;
                }
            }
            if (id.empty()) {
                auto resolved = resolve({title, 0, 0}, world.index, *world.embedder,
                                        config.resolve_threshold, world.corpus.exclusions());
                if (resolved.resolved()) id = resolved.paper_id;
            }
            if (id.empty()) {
                log_warn("references entry [" + std::to_string(number) + "] '" + title +
                         "' not found in corpus");
                id = "unresolved-" + std::to_string(number);
            }
            document.bibliography.add(id);
            ++expected;
        }
    }

    std::vector<CandidateReport> candidates;
    candidates.push_back(evaluate_candidate(1, std::move(document), world, config));
    return finish_artifact(config, world, std::move(candidates), 0, started, false);
}

} // namespace surveygen
