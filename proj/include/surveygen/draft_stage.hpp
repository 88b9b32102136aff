#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surveygen/prompts.hpp"
#include "surveygen/stage_context.hpp"

namespace surveygen {

struct DraftTask {
    int section_index = 0;
    int subsection_index = 0;
    std::string section_name;
    std::string subsection_name;
    std::string description;
    std::vector<std::string> refs; // ordered corpus ids, top-k for the task
    int word_target = 700;

    bool operator==(const DraftTask&) const = default;
};

struct SubsectionDraft {
    DraftTask task;
    std::string text; // prose with "[<paper title>]" citations
};

struct DraftParams {
    int k_sub = 60;
    std::int64_t body_budget = 1500;   // per-paper content truncation
    int word_target = 700;
    std::int64_t context_budget = 120000; // whole-prompt ceiling for the writer
};

/// One task per subsection, in outline order. The retrieval query is
/// "{section name}: {subsection name}. {description}".
std::vector<DraftTask> plan_tasks(const Outline& outline, const StageContext& ctx,
                                  const DraftParams& params);

/// Renders the writing prompt (full outline, body-field paper list with
/// abstract fallback, word target) and returns the writer's text.
SubsectionDraft draft_subsection(const DraftTask& task, const Outline& outline,
                                 const StageContext& ctx, const DraftParams& params);

/// Fan-out over tasks; results in task order regardless of completion order.
/// Throws StageError listing every failed task's coordinates if any task
/// fails after the gateway's retries.
std::vector<SubsectionDraft> draft_all(const std::vector<DraftTask>& tasks,
                                       const Outline& outline, const StageContext& ctx,
                                       const DraftParams& params);

} // namespace surveygen
