#include "surveygen/outline_stage.hpp"

#include <algorithm>

#include "surveygen/errors.hpp"
#include "surveygen/parallel.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

namespace {

// Fixed allowance for the template text around the paper list.
constexpr std::int64_t kPromptOverheadTokens = 512;

std::int64_t per_paper_cap(std::int64_t window_budget) {
    return std::max<std::int64_t>(1, window_budget - 64);
}

std::vector<const PaperRecord*> records_for(const Corpus& corpus,
                                            const std::vector<std::string>& ids) {
    std::vector<const PaperRecord*> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) {
        const PaperRecord* rec = corpus.find(id);
        if (rec == nullptr) throw StageError("retrieved id '" + id + "' not in corpus");
        out.push_back(rec);
    }
    return out;
}

ChatRequest user_request(std::string stage, std::string prompt) {
    ChatRequest req;
    req.stage = std::move(stage);
    req.messages.push_back({"user", std::move(prompt)});
    return req;
}

/// One generation + parse, with a single regeneration retry on a parse error.
template <typename ParseFn>
auto complete_and_parse(Gateway& gateway, const std::string& stage, const std::string& prompt,
                        ParseFn&& parse) -> decltype(parse(std::string{})) {
    std::string reply = gateway.complete(user_request(stage, prompt)).text;
    try {
        return parse(reply);
    } catch (const ParseError& first) {
        log_warn(stage + ": unparseable reply, retrying generation once: " +
                 std::string(first.what()).substr(0, 160));
        reply = gateway.complete(user_request(stage, prompt)).text;
        return parse(reply);
    }
}

std::string join_candidates(const std::vector<std::string>& texts) {
    std::string out;
    for (const std::string& t : texts) {
        if (!out.empty()) out += "\n---\n";
        out += t;
    }
    return out;
}

Outline merge_once(const StageContext& ctx, const std::vector<std::string>& candidate_texts) {
    const PromptTemplate& tmpl = ctx.templates.get(TemplateName::kMergingOutline);
    const std::string prompt = render(tmpl, {{"TOPIC", ctx.topic},
                                             {"OUTLINE LIST", join_candidates(candidate_texts)}});
    return complete_and_parse(ctx.gateway, stages::kMergeOutline, prompt,
                              [](const std::string& text) { return parse_outline(text); });
}

/// Merges candidates, splitting into budget-sized groups when the joined list
/// itself exceeds the window. Every group (except possibly the last) holds at
/// least two candidates, so each round strictly shrinks and the recursion
/// terminates even when single candidates approach the window size.
Outline merge_candidates(const StageContext& ctx, std::vector<Outline> candidates,
                         std::int64_t window_budget) {
    while (candidates.size() > 1) {
        std::vector<std::string> texts;
        texts.reserve(candidates.size());
        for (const Outline& o : candidates) texts.push_back(serialize(o));

        if (estimate_tokens(join_candidates(texts)) <= window_budget) {
            return merge_once(ctx, texts);
        }

        std::vector<Outline> merged;
        std::size_t i = 0;
        while (i < candidates.size()) {
            std::vector<std::string> group;
            std::int64_t group_tokens = 0;
            std::size_t begin = i;
            while (i < candidates.size()) {
                const std::int64_t t = estimate_tokens(texts[i]) + 1;
                if (group.size() >= 2 && group_tokens + t > window_budget) break;
                group_tokens += t;
                group.push_back(texts[i]);
                ++i;
            }
            merged.push_back(group.size() == 1 ? std::move(candidates[begin])
                                               : merge_once(ctx, group));
        }
        candidates = std::move(merged);
    }
    return std::move(candidates.front());
}

Outline validated_section_count(const StageContext& ctx, Outline outline,
                                const std::vector<Outline>& candidates, int section_count) {
    if (static_cast<int>(outline.sections.size()) == section_count) return outline;

    log_warn("merged outline has " + std::to_string(outline.sections.size()) +
             " sections, expected " + std::to_string(section_count) + "; re-asking once");
    std::vector<std::string> texts;
    for (const Outline& o : candidates) texts.push_back(serialize(o));
    // Single corrective re-ask with an explicit instruction, then hard error.
    const PromptTemplate& tmpl = ctx.templates.get(TemplateName::kMergingOutline);
    std::string prompt = render(tmpl, {{"TOPIC", ctx.topic},
                                       {"OUTLINE LIST", join_candidates(texts)}});
    prompt += "\nThe final outline must contain exactly " + std::to_string(section_count) +
              " sections. Return the outline again with exactly " +
              std::to_string(section_count) + " sections.\n";
    Outline retried = complete_and_parse(ctx.gateway, stages::kMergeOutline, prompt,
                                         [](const std::string& text) { return parse_outline(text); });
    if (static_cast<int>(retried.sections.size()) != section_count) {
        throw StageError("section count mismatch: expected " + std::to_string(section_count) +
                         ", got " + std::to_string(retried.sections.size()));
    }
    return retried;
}

} // namespace

ChunkPlan chunk_papers(const std::vector<const PaperRecord*>& papers, std::int64_t window_budget,
                       std::uint64_t seed) {
    if (window_budget <= 0) throw Error("chunk_papers: window_budget must be > 0");

    std::vector<const PaperRecord*> shuffled = papers;
    Rng rng(seed);
    rng.shuffle(shuffled);

    ChunkPlan plan;
    plan.seed = seed;
    plan.window_budget = window_budget;

    std::vector<std::string> current;
    std::int64_t current_tokens = 0;
    for (const PaperRecord* paper : shuffled) {
        const std::int64_t t = paper_block_tokens(*paper, PaperField::kAbstract);
        if (!current.empty() && current_tokens + t > window_budget) {
            plan.chunks.push_back(std::move(current));
            current.clear();
            current_tokens = 0;
        }
        current.push_back(paper->id);
        current_tokens += t;
    }
    if (!current.empty()) plan.chunks.push_back(std::move(current));
    return plan;
}

Outline generate_outline(const StageContext& ctx, const OutlineParams& params) {
    const std::size_t visible = ctx.corpus.visible().size();
    std::size_t k = static_cast<std::size_t>(std::max(0, params.k_init));
    if (k > visible) {
        log_warn("k_init " + std::to_string(k) + " exceeds corpus size " +
                 std::to_string(visible) + "; using the full corpus");
        k = visible;
    }
    auto pool = retrieve(ctx.index, ctx.embedder, ctx.topic, k, IndexNamespace::kAbstract,
                         ctx.corpus.exclusions());
    if (pool.empty()) {
        throw StageError("outline stage: retrieval returned no papers for topic '" + ctx.topic +
                         "'");
    }
    std::vector<std::string> pool_ids;
    pool_ids.reserve(pool.size());
    for (const ScoredId& s : pool) pool_ids.push_back(s.id);
    auto pool_records = records_for(ctx.corpus, pool_ids);

    ChunkPlan plan = chunk_papers(pool_records, params.window_budget, params.seed);

    // Rough outlines for all chunks, in parallel; a chunk that stays
    // unparseable after one regeneration is dropped with a warning.
    const PromptTemplate& rough = ctx.templates.get(TemplateName::kRoughOutline);
    std::vector<std::optional<Outline>> drafts(plan.chunks.size());
    auto rough_errors = run_parallel(plan.chunks.size(), [&](std::size_t i) {
        auto chunk_records = records_for(ctx.corpus, plan.chunks[i]);
        const std::string paper_list =
            render_paper_list(chunk_records, PaperField::kAbstract, params.window_budget,
                              per_paper_cap(params.window_budget));
        const std::string prompt =
            render(rough, {{"TOPIC", ctx.topic},
                           {"PAPER LIST", paper_list},
                           {"SECTION NUM", std::to_string(params.section_count)}});
        if (estimate_tokens(prompt) > params.window_budget + kPromptOverheadTokens) {
            throw StageError("rough outline prompt for chunk " + std::to_string(i) +
                             " exceeds the window budget");
        }
        try {
            drafts[i] = complete_and_parse(ctx.gateway, stages::kRoughOutline, prompt,
                                           [](const std::string& text) { return parse_outline(text); });
        } catch (const ParseError& e) {
            log_warn("dropping chunk " + std::to_string(i) + ": " +
                     std::string(e.what()).substr(0, 160));
        }
    });

    // Parse failures were already dropped inside the workers; anything left
    // here is a hard failure (transport, planning) and propagates.
    for (const std::exception_ptr& err : rough_errors) {
        if (err) std::rethrow_exception(err);
    }

    std::vector<Outline> candidates;
    for (auto& d : drafts) {
        if (d.has_value()) candidates.push_back(std::move(*d));
    }
    if (candidates.empty()) {
        throw StageError("outline stage: all " + std::to_string(plan.chunks.size()) +
                         " chunks failed to produce a parseable outline");
    }

    Outline merged = merge_candidates(ctx, candidates, params.window_budget);
    merged = validated_section_count(ctx, std::move(merged), candidates, params.section_count);

    // Subsection enrichment, one call per section, in parallel.
    const PromptTemplate& enrich = ctx.templates.get(TemplateName::kSubsectionOutline);
    const std::string overall = serialize(merged);
    std::vector<std::vector<Subsection>> enriched(merged.sections.size());
    auto errors = run_parallel(merged.sections.size(), [&](std::size_t i) {
        const Section& section = merged.sections[i];
        auto hits = retrieve(ctx.index, ctx.embedder, section.description,
                             static_cast<std::size_t>(std::max(0, params.k_enrich)),
                             IndexNamespace::kAbstract, ctx.corpus.exclusions());
        std::vector<std::string> ids;
        for (const ScoredId& s : hits) ids.push_back(s.id);
        const std::string paper_list =
            render_paper_list(records_for(ctx.corpus, ids), PaperField::kAbstract,
                              params.window_budget, per_paper_cap(params.window_budget));
        const std::string prompt = render(enrich, {{"TOPIC", ctx.topic},
                                                   {"OVERALL OUTLINE", overall},
                                                   {"SECTION NAME", section.name},
                                                   {"SECTION DESCRIPTION", section.description},
                                                   {"PAPER LIST", paper_list}});
        enriched[i] = complete_and_parse(ctx.gateway, stages::kSubsectionOutline, prompt,
                                         [](const std::string& text) { return parse_subsections(text); });
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw StageError("enriching section " + std::to_string(i + 1) + " ('" +
                                 merged.sections[i].name + "') failed: " + e.what());
            }
        }
        merged.sections[i].subsections = std::move(enriched[i]);
    }
    return merged;
}

} // namespace surveygen
