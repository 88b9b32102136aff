#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surveygen/citations.hpp"
#include "surveygen/document.hpp"
#include "surveygen/draft_stage.hpp"
#include "surveygen/stage_context.hpp"

namespace surveygen {

struct RefineParams {
    std::int64_t body_budget = 1500;      // per-paper budget for the reference list
    std::int64_t context_budget = 120000; // same ceiling as drafting
};

/// Citation reflection over the draft's own reference list. Best-effort: a
/// gateway failure, an empty reply, or a reply that loses more than half the
/// text keeps the original with a warning.
SubsectionDraft reflect_citations(const SubsectionDraft& draft, const StageContext& ctx,
                                  const RefineParams& params);

/// Local-coherence polish against the neighbor texts ("N/A" sentinels at the
/// document edges). Same length guard as reflection, plus a hard guard: the
/// set of bracketed citation strings must survive the rewrite, otherwise the
/// original text is kept with a warning.
std::string polish_coherence(const std::optional<std::string>& previous, const std::string& current,
                             const std::optional<std::string>& next, const StageContext& ctx);

/// Reflection for every draft, in parallel.
std::vector<SubsectionDraft> reflect_all(const std::vector<SubsectionDraft>& drafts,
                                         const StageContext& ctx, const RefineParams& params);

/// Sequential polish in document order: each call sees the already-polished
/// text on the previous side and the reflected-but-unpolished text on the
/// next side.
std::vector<SubsectionDraft> polish_all(const std::vector<SubsectionDraft>& drafts,
                                        const StageContext& ctx);

/// Merges drafts into the survey document: "# {title}", then "## {k}. {name}"
/// per section and "### {k}.{m} {name}" plus text per subsection.
/// Drafts must cover the outline exactly; missing ones raise StageError with
/// the coordinates.
SurveyDocument merge_document(const Outline& outline, const std::vector<SubsectionDraft>& drafts);

} // namespace surveygen
