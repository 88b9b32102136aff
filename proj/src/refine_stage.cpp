#include "surveygen/refine_stage.hpp"

#include <set>

#include "surveygen/errors.hpp"
#include "surveygen/parallel.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

namespace {

constexpr const char* kBeginSentinel = "N/A (beginning of document)";
constexpr const char* kEndSentinel = "N/A (end of document)";

std::string coordinates(const SubsectionDraft& draft) {
    return std::to_string(draft.task.section_index) + "." +
           std::to_string(draft.task.subsection_index);
}

/// Best-effort guard shared by both refinement calls: reject empty replies and
/// replies that lose more than half the original length.
bool acceptable_length(const std::string& original, const std::string& revised) {
    if (trim(revised).empty()) return false;
    return revised.size() * 2 >= original.size();
}

std::set<std::string> bracket_set(const std::string& text) {
    std::set<std::string> out;
    for (const CitationMention& m : scan_brackets(text)) out.insert(m.raw);
    return out;
}

std::string complete_stage(const StageContext& ctx, const char* stage, std::string prompt) {
    ChatRequest req;
    req.stage = stage;
    req.messages.push_back({"user", std::move(prompt)});
    return ctx.gateway.complete(req).text;
}

} // namespace

SubsectionDraft reflect_citations(const SubsectionDraft& draft, const StageContext& ctx,
                                  const RefineParams& params) {
    const PromptTemplate& tmpl = ctx.templates.get(TemplateName::kCitationReflection);
    std::vector<const PaperRecord*> refs;
    refs.reserve(draft.task.refs.size());
    for (const std::string& id : draft.task.refs) {
        const PaperRecord* rec = ctx.corpus.find(id);
        if (rec != nullptr) refs.push_back(rec);
    }
    const std::string paper_list =
        render_paper_list(refs, PaperField::kBody, params.context_budget, params.body_budget);
    const std::string prompt = render(tmpl, {{"TOPIC", ctx.topic},
                                             {"PAPER LIST", paper_list},
                                             {"SUBSECTION", draft.text}});
    std::string revised;
    try {
        revised = complete_stage(ctx, stages::kReflect, prompt);
    } catch (const std::exception& e) {
        log_warn("reflection for " + coordinates(draft) + " failed, keeping original: " +
                 e.what());
        return draft;
    }
    if (!acceptable_length(draft.text, revised)) {
        log_warn("reflection for " + coordinates(draft) +
                 " returned a degenerate reply, keeping original");
        return draft;
    }
    SubsectionDraft out = draft;
    out.text = std::move(revised);
    return out;
}

std::string polish_coherence(const std::optional<std::string>& previous, const std::string& current,
                             const std::optional<std::string>& next, const StageContext& ctx) {
    const PromptTemplate& tmpl = ctx.templates.get(TemplateName::kCoherencyRefinement);
    const std::string prompt = render(tmpl, {{"TOPIC", ctx.topic},
                                             {"PREVIOUS", previous.value_or(kBeginSentinel)},
                                             {"FOLLOWING", next.value_or(kEndSentinel)},
                                             {"SUBSECTION", current}});
    std::string revised;
    try {
        revised = complete_stage(ctx, stages::kPolish, prompt);
    } catch (const std::exception& e) {
        log_warn("polish failed, keeping original: " + std::string(e.what()));
        return current;
    }
    if (!acceptable_length(current, revised)) {
        log_warn("polish returned a degenerate reply, keeping original");
        return current;
    }
    if (bracket_set(revised) != bracket_set(current)) {
        log_warn("polish altered the citation set, keeping original");
        return current;
    }
    return revised;
}

std::vector<SubsectionDraft> reflect_all(const std::vector<SubsectionDraft>& drafts,
                                         const StageContext& ctx, const RefineParams& params) {
    std::vector<SubsectionDraft> out(drafts.size());
    auto errors = run_parallel(drafts.size(), [&](std::size_t i) {
        out[i] = reflect_citations(drafts[i], ctx, params);
    });
    for (const std::exception_ptr& err : errors) {
        if (err) std::rethrow_exception(err); // only render/setup bugs reach here
    }
    return out;
}

std::vector<SubsectionDraft> polish_all(const std::vector<SubsectionDraft>& drafts,
                                        const StageContext& ctx) {
    std::vector<SubsectionDraft> out = drafts;
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::optional<std::string> prev;
        std::optional<std::string> next;
        if (i > 0) prev = out[i - 1].text; // already polished
        if (i + 1 < out.size()) next = drafts[i + 1].text; // reflected, unpolished
        out[i].text = polish_coherence(prev, drafts[i].text, next, ctx);
    }
    return out;
}

SurveyDocument merge_document(const Outline& outline, const std::vector<SubsectionDraft>& drafts) {
    std::size_t cursor = 0;
    std::string text = "# " + outline.title + "\n\n";
    for (const Section& section : outline.sections) {
        text += "## " + std::to_string(section.index) + ". " + section.name + "\n\n";
        for (const Subsection& sub : section.subsections) {
            if (cursor >= drafts.size() ||
                drafts[cursor].task.section_index != section.index ||
                drafts[cursor].task.subsection_index != sub.index) {
                throw StageError("merge: missing draft for subsection " +
                                 std::to_string(section.index) + "." + std::to_string(sub.index));
            }
            text += "### " + std::to_string(section.index) + "." + std::to_string(sub.index) +
                    " " + sub.name + "\n\n";
            text += drafts[cursor].text;
            text += "\n\n";
            ++cursor;
        }
    }
    if (cursor != drafts.size()) {
        throw StageError("merge: " + std::to_string(drafts.size() - cursor) +
                         " drafts do not correspond to any outline subsection");
    }
    SurveyDocument doc;
    doc.title = outline.title;
    doc.text = std::move(text);
    return doc;
}

} // namespace surveygen
