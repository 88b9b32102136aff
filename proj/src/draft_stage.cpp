#include "surveygen/draft_stage.hpp"

#include <algorithm>

#include "surveygen/errors.hpp"
#include "surveygen/parallel.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

namespace {

std::string task_coordinates(const DraftTask& task) {
    return std::to_string(task.section_index) + "." + std::to_string(task.subsection_index) +
           " ('" + task.subsection_name + "')";
}

std::vector<const PaperRecord*> ref_records(const Corpus& corpus, const DraftTask& task) {
    std::vector<const PaperRecord*> out;
    out.reserve(task.refs.size());
    for (const std::string& id : task.refs) {
        const PaperRecord* rec = corpus.find(id);
        if (rec == nullptr) {
            throw StageError("draft " + task_coordinates(task) + ": ref id '" + id +
                             "' not in corpus");
        }
        out.push_back(rec);
    }
    return out;
}

} // namespace

std::vector<DraftTask> plan_tasks(const Outline& outline, const StageContext& ctx,
                                  const DraftParams& params) {
    std::vector<DraftTask> tasks;
    for (const Section& section : outline.sections) {
        for (const Subsection& sub : section.subsections) {
            DraftTask task;
            task.section_index = section.index;
            task.subsection_index = sub.index;
            task.section_name = section.name;
            task.subsection_name = sub.name;
            task.description = sub.description;
            task.word_target = params.word_target;
            const std::string query =
                section.name + ": " + sub.name + ". " + sub.description;
            auto hits = retrieve(ctx.index, ctx.embedder, query,
                                 static_cast<std::size_t>(std::max(0, params.k_sub)),
                                 IndexNamespace::kAbstract, ctx.corpus.exclusions());
            task.refs.reserve(hits.size());
            for (const ScoredId& s : hits) task.refs.push_back(s.id);
            tasks.push_back(std::move(task));
        }
    }
    return tasks;
}

SubsectionDraft draft_subsection(const DraftTask& task, const Outline& outline,
                                 const StageContext& ctx, const DraftParams& params) {
    const PromptTemplate& tmpl = ctx.templates.get(TemplateName::kSubsectionWriting);

    // Budget the paper list from what the template skeleton leaves over; an
    // overflow after rendering is a planning error, not a provider error.
    const std::string overall = serialize(outline);
    std::map<std::string, std::string> slots = {
        {"TOPIC", ctx.topic},
        {"OVERALL OUTLINE", overall},
        {"PAPER LIST", ""},
        {"SUBSECTION NAME", task.subsection_name},
        {"DESCRIPTION", task.description},
        {"WORD NUM", std::to_string(task.word_target)},
    };
    const std::int64_t skeleton_tokens = estimate_tokens(render(tmpl, slots));
    const std::int64_t list_budget = params.context_budget - skeleton_tokens - 64;
    if (list_budget <= 0) {
        throw StageError("draft " + task_coordinates(task) +
                         ": context budget too small for the writing prompt");
    }
    slots["PAPER LIST"] = render_paper_list(ref_records(ctx.corpus, task), PaperField::kBody,
                                            list_budget, params.body_budget);
    const std::string prompt = render(tmpl, slots);
    if (estimate_tokens(prompt) > params.context_budget) {
        throw StageError("draft " + task_coordinates(task) + ": rendered prompt exceeds the " +
                         std::to_string(params.context_budget) + "-token context budget");
    }

    ChatRequest req;
    req.stage = stages::kDraft;
    req.messages.push_back({"user", prompt});
    std::string text;
    try {
        text = ctx.gateway.complete(req).text;
    } catch (const std::exception& e) {
        throw StageError("draft " + task_coordinates(task) + " failed: " + e.what());
    }
    if (trim(text).empty()) {
        throw StageError("draft " + task_coordinates(task) + " returned empty text");
    }
    return {task, std::move(text)};
}

std::vector<SubsectionDraft> draft_all(const std::vector<DraftTask>& tasks,
                                       const Outline& outline, const StageContext& ctx,
                                       const DraftParams& params) {
    std::vector<SubsectionDraft> drafts(tasks.size());
    auto errors = run_parallel(tasks.size(), [&](std::size_t i) {
        drafts[i] = draft_subsection(tasks[i], outline, ctx, params);
    });

    std::string failures;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            if (!failures.empty()) failures += "; ";
            failures += task_coordinates(tasks[i]) + ": " + e.what();
        }
    }
    if (!failures.empty()) {
        throw StageError("drafting failed for " + failures);
    }
    return drafts;
}

} // namespace surveygen
