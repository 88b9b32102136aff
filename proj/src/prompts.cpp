#include "surveygen/prompts.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "surveygen/errors.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

// =============================================================================
// Built-in templates
// =============================================================================

namespace {

const char* kRoughOutlineBody = R"PROMPT(You want to write a overall and comprehensive academic survey about [TOPIC].
You are provided with a list of papers related to the topic below:
---
[PAPER LIST]
---
You need to draft a outline based on the given papers.
The outline should contains a title and several sections.
Each section follows with a brief sentence to describe what to write in this section.
The outline is supposed to be comprehensive and contains [SECTION NUM] sections.

Return in the format:
<format>
Title: [TITLE OF THE SURVEY]
Section 1: [NAME OF SECTION 1]
Description 1: [DESCRIPTION OF SENTCTION 1]

...

Section K: [NAME OF SECTION K]
Description K: [DESCRIPTION OF SENTCTION K]
</format>
The outline:
)PROMPT";

const char* kSubsectionOutlineBody = R"PROMPT(You want to write a overall survey about [TOPIC].
You have created a overall outline below:
---
[OVERALL OUTLINE]
---
The outline contains a title and several sections.
Each section follows with a brief sentence to describe what to write in this section.
You need to enrich the section [SECTION NAME].
The description of [SECTION NAME]: [SECTION DESCRIPTION]
You need to generate the framwork containing several subsections based on the overall outlines.
Each subsection follows with a brief sentence to describe what to write in this subsection.
These papers provided for references:
---
[PAPER LIST]
---
Return the outline in the format:
<format>
Subsection 1: [NAME OF SUBSECTION 1]
Description 1: [DESCRIPTION OF SUBSENTCTION 1]

...

Subsection K: [NAME OF SUBSECTION K]
Description K: [DESCRIPTION OF SUBSENTCTION K]
</format>
Only return the outline without any other informations:
)PROMPT";

const char* kMergingOutlineBody = R"PROMPT(You want to write a overall survey about [TOPIC].
You are provided with a list of outlines as candidates below:
---
[OUTLINE LIST]
---
Each outline contains a title and several sections.
Each section follows with a brief sentence to describe what to write in this section.
You need to generate a final outline based on these provided outlines to make the final outline show comprehensive insights of the topic and more logical.
Return the in the format:
<format>
Title: [TITLE OF THE SURVEY]
Section 1: [NAME OF SECTION 1]
Description 1: [DESCRIPTION OF SENTCTION 1]

...

Section K: [NAME OF SECTION K]
Description K: [DESCRIPTION OF SENTCTION K]
</format>
Only return the final outline without any other informations:
)PROMPT";

const char* kSubsectionWritingBody = R"PROMPT(You  wants to write a overall and comprehensive survey about [TOPIC].
You have created a overall outline below:
---
[OVERALL OUTLINE]
---
Below are a list of papers for reference:
---
[PAPER LIST]
---

Now you need to write the content for the subsection:
"[SUBSECTION NAME]".
The details of what to write in this subsection called [SUBSECTION NAME] is in this descripition:
---
[DESCRIPTION]
---
Here is the requirement you must follow:
1. The subsection is recommended to contain more than [WORD NUM] words.
2. When writing sentences that are based on specific papers above, you cite the "paper_title" in a '[]' format to support your content.

Here's a concise guideline for when to cite papers in a survey:
---
1. Summarizing Research: Cite sources when summarizing the existing literature.
2. Using Specific Concepts or Data: Provide citations when discussing specific theories, models, or data.
3. Using Established Methods: Cite the creators of methodologies you employ in your survey.
4. Supporting Arguments: Cite sources that back up your conclusions and arguments.
---
Only return the content more than [WORD NUM] words you write for the subsection [SUBSECTION NAME] without any other information:
)PROMPT";

const char* kCitationReflectionBody = R"PROMPT(You want to write a overall and comprehensive survey about [TOPIC].
Below are a list of papers for references:
---
[PAPER LIST]
---
You have written a subsection below:
---
[SUBSECTION]
---
The sentences that are based on specific papers above are followed with the citation of "paper_title" in "[]".
For example 'the emergence of large language models (LLMs) [PaLM: Scaling language modeling with pathways]'

Here's a concise guideline for when to cite papers in a survey:
---
1. Summarizing Research: Cite sources when summarizing the existing literature.
2. Using Specific Concepts or Data: Provide citations when discussing specific theories, models, or data.
3. Using Established Methods: Cite the creators of methodologies you employ in your survey.
4. Supporting Arguments: Cite sources that back up your conclusions and arguments.
---

Now you need to check whether the citations of "paper_title" in this subsection is correct.
Once the citation can not support the sentence you write, correct the paper_title in '[]' or just remove it.

Do not change any other things except the citations.
Only return the subsection with correct citations:
)PROMPT";

const char* kCoherencyRefinementBody = R"PROMPT(You want to write a overall and comprehensive survey about [TOPIC].

Now you need to help to refine one of the subsection to improve th ecoherence of your survey.

You are provied with the content of the subsection along with the previous subsections and following subsections.

Previous Subsection:
---
[PREVIOUS]
---

Following Subsection:
---
[FOLLOWING]
---

Subsection to Refine:
---
[SUBSECTION]
---

Now refine the subsection to enhance coherence, and ensure that it connects more fluidly with the previous and following subsections.
Remember that keep all the essence and core information of the subsection intact. Do not modify any citations in [] following the sentences!!!!
Only return the whole refined content of the subsection without any other informations:
)PROMPT";

PromptTemplate make_template(TemplateName name) {
    PromptTemplate t;
    t.name = template_name_str(name);
    switch (name) {
        case TemplateName::kRoughOutline:
            t.body = kRoughOutlineBody;
            t.placeholders = {"TOPIC", "PAPER LIST", "SECTION NUM"};
            break;
        case TemplateName::kSubsectionOutline:
            t.body = kSubsectionOutlineBody;
            t.placeholders = {"TOPIC", "OVERALL OUTLINE", "SECTION NAME", "SECTION DESCRIPTION",
                              "PAPER LIST"};
            break;
        case TemplateName::kMergingOutline:
            t.body = kMergingOutlineBody;
            t.placeholders = {"TOPIC", "OUTLINE LIST"};
            break;
        case TemplateName::kSubsectionWriting:
            t.body = kSubsectionWritingBody;
            t.placeholders = {"TOPIC", "OVERALL OUTLINE", "PAPER LIST", "SUBSECTION NAME",
                              "DESCRIPTION", "WORD NUM"};
            break;
        case TemplateName::kCitationReflection:
            t.body = kCitationReflectionBody;
            t.placeholders = {"TOPIC", "PAPER LIST", "SUBSECTION"};
            break;
        case TemplateName::kCoherencyRefinement:
            t.body = kCoherencyRefinementBody;
            t.placeholders = {"TOPIC", "PREVIOUS", "FOLLOWING", "SUBSECTION"};
            break;
    }
    t.validate();
    return t;
}

constexpr std::array<TemplateName, 6> kAllTemplates = {
    TemplateName::kRoughOutline,      TemplateName::kSubsectionOutline,
    TemplateName::kMergingOutline,    TemplateName::kSubsectionWriting,
    TemplateName::kCitationReflection, TemplateName::kCoherencyRefinement,
};

} // namespace

const char* template_name_str(TemplateName name) {
    switch (name) {
        case TemplateName::kRoughOutline: return "rough_outline";
        case TemplateName::kSubsectionOutline: return "subsection_outline";
        case TemplateName::kMergingOutline: return "merging_outline";
        case TemplateName::kSubsectionWriting: return "subsection_writing";
        case TemplateName::kCitationReflection: return "citation_reflection";
        case TemplateName::kCoherencyRefinement: return "coherency_refinement";
    }
    return "unknown";
}

void PromptTemplate::validate() const {
    for (const std::string& ph : placeholders) {
        if (body.find("[" + ph + "]") == std::string::npos) {
            throw Error("template '" + name + "' never uses declared placeholder [" + ph + "]");
        }
    }
}

const PromptTemplate& builtin_template(TemplateName name) {
    static const std::map<std::string, PromptTemplate> builtins = [] {
        std::map<std::string, PromptTemplate> m;
        for (TemplateName n : kAllTemplates) {
            m.emplace(template_name_str(n), make_template(n));
        }
        return m;
    }();
    return builtins.at(template_name_str(name));
}

TemplateSet::TemplateSet(const std::optional<std::filesystem::path>& override_dir) {
    if (!override_dir) return;
    for (TemplateName n : kAllTemplates) {
        const std::string base = template_name_str(n);
        for (const std::string& candidate : {base + ".txt", base}) {
            const auto path = *override_dir / candidate;
            if (!std::filesystem::exists(path)) continue;
            std::ifstream in(path, std::ios::binary);
            if (!in) throw IoError("cannot read template override: " + path.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            PromptTemplate t = builtin_template(n);
            t.body = buf.str();
            t.validate();
            overrides_.emplace(base, std::move(t));
            break;
        }
    }
}

const PromptTemplate& TemplateSet::get(TemplateName name) const {
    auto it = overrides_.find(template_name_str(name));
    if (it != overrides_.end()) return it->second;
    return builtin_template(name);
}

std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& slots) {
    for (const std::string& ph : tmpl.placeholders) {
        if (slots.find(ph) == slots.end()) {
            throw RenderError("template '" + tmpl.name + "': no slot for [" + ph + "]");
        }
    }
    std::string out;
    out.reserve(tmpl.body.size());
    std::size_t pos = 0;
    while (pos < tmpl.body.size()) {
        if (tmpl.body[pos] == '[') {
            bool replaced = false;
            for (const std::string& ph : tmpl.placeholders) {
                const std::size_t token_len = ph.size() + 2;
                if (tmpl.body.compare(pos, token_len, "[" + ph + "]") == 0) {
                    out += slots.at(ph);
                    pos += token_len;
                    replaced = true;
                    break;
                }
            }
            if (replaced) continue;
        }
        out.push_back(tmpl.body[pos]);
        ++pos;
    }
    return out;
}

// =============================================================================
// Paper lists
// =============================================================================

std::string render_paper_block(const PaperRecord& paper, PaperField field,
                               std::int64_t per_paper_budget) {
    std::string content = field == PaperField::kAbstract
                              ? paper.abstract
                              : (paper.body.empty() ? paper.abstract : paper.body);
    if (per_paper_budget > 0) content = truncate_to_budget(content, per_paper_budget);
    return "paper_title: " + paper.title + "\n" + content;
}

std::int64_t paper_block_tokens(const PaperRecord& paper, PaperField field,
                                std::int64_t per_paper_budget) {
    return estimate_tokens(render_paper_block(paper, field, per_paper_budget) + "\n\n");
}

std::string render_paper_list(const std::vector<const PaperRecord*>& papers, PaperField field,
                              std::int64_t total_budget, std::int64_t per_paper_budget) {
    std::string out;
    for (const PaperRecord* paper : papers) {
        std::string block = render_paper_block(*paper, field, per_paper_budget);
        std::string candidate = out.empty() ? block : out + "\n\n" + block;
        if (estimate_tokens(candidate) > total_budget) break;
        out = std::move(candidate);
    }
    return out;
}

// =============================================================================
// Outline parsing
// =============================================================================

std::size_t Outline::subsection_count() const {
    std::size_t n = 0;
    for (const Section& s : sections) n += s.subsections.size();
    return n;
}

std::string serialize(const Outline& outline) {
    std::string out = "Title: " + outline.title + "\n";
    for (std::size_t i = 0; i < outline.sections.size(); ++i) {
        const Section& sec = outline.sections[i];
        const std::string k = std::to_string(i + 1);
        out += "Section " + k + ": " + sec.name + "\n";
        out += "Description " + k + ": " + sec.description + "\n";
        for (std::size_t j = 0; j < sec.subsections.size(); ++j) {
            const Subsection& sub = sec.subsections[j];
            const std::string m = std::to_string(j + 1);
            out += "Subsection " + m + ": " + sub.name + "\n";
            out += "Description " + m + ": " + sub.description + "\n";
        }
    }
    return out;
}

namespace {

void strip_tag(std::string& text, const std::string& tag) {
    std::size_t pos;
    while ((pos = text.find(tag)) != std::string::npos) {
        text.erase(pos, tag.size());
    }
}

struct HeaderLine {
    enum Kind { kTitle, kSection, kSubsection, kDescription } kind;
    std::string value;
};

std::optional<HeaderLine> match_header(const std::string& raw) {
    std::string line = trim(raw);
    // Tolerate markdown prefixes the model may add.
    std::size_t start = 0;
    while (start < line.size() &&
           (line[start] == '#' || line[start] == '*' || line[start] == '-' || line[start] == ' ')) {
        ++start;
    }
    line = line.substr(start);

    static const std::pair<const char*, HeaderLine::Kind> keywords[] = {
        {"subsection", HeaderLine::kSubsection},
        {"section", HeaderLine::kSection},
        {"description", HeaderLine::kDescription},
        {"title", HeaderLine::kTitle},
    };
    for (const auto& [kw, kind] : keywords) {
        if (!istarts_with(line, kw)) continue;
        std::size_t pos = std::string(kw).size();
        while (pos < line.size() && line[pos] == ' ') ++pos;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
        while (pos < line.size() && line[pos] == ' ') ++pos;
        if (pos >= line.size() || line[pos] != ':') break; // not a header after all
        std::string value = trim(line.substr(pos + 1));
        // Bracketed scaffolding from an echoed <format> block is not a value.
        if (!value.empty() && value.front() == '[' && value.back() == ']') value.clear();
        return HeaderLine{kind, std::move(value)};
    }
    return std::nullopt;
}

struct ParsedLines {
    std::string title;
    std::vector<Section> sections;
    std::vector<Subsection> loose_subsections; // before any section header
};

ParsedLines scan_lines(const std::string& text) {
    std::string cleaned = text;
    for (const char* tag : {"<format>", "</format>", "<FORMAT>", "</FORMAT>"}) {
        strip_tag(cleaned, tag);
    }

    ParsedLines out;
    enum class Target { kNone, kSection, kSubsection, kLoose } target = Target::kNone;

    for (const std::string& raw : split_lines(cleaned)) {
        auto header = match_header(raw);
        if (!header) continue;
        switch (header->kind) {
            case HeaderLine::kTitle:
                if (out.title.empty()) out.title = header->value;
                break;
            case HeaderLine::kSection:
                if (header->value.empty()) break;
                out.sections.push_back({0, header->value, "", {}});
                target = Target::kSection;
                break;
            case HeaderLine::kSubsection:
                if (header->value.empty()) break;
                if (out.sections.empty()) {
                    out.loose_subsections.push_back({0, header->value, ""});
                    target = Target::kLoose;
                } else {
                    out.sections.back().subsections.push_back({0, header->value, ""});
                    target = Target::kSubsection;
                }
                break;
            case HeaderLine::kDescription: {
                if (header->value.empty()) break;
                std::string* slot = nullptr;
                if (target == Target::kSection && !out.sections.empty()) {
                    slot = &out.sections.back().description;
                } else if (target == Target::kSubsection && !out.sections.empty() &&
                           !out.sections.back().subsections.empty()) {
                    slot = &out.sections.back().subsections.back().description;
                } else if (target == Target::kLoose && !out.loose_subsections.empty()) {
                    slot = &out.loose_subsections.back().description;
                }
                if (slot != nullptr && slot->empty()) *slot = header->value;
                break;
            }
        }
    }
    return out;
}

void renumber(Outline& outline) {
    for (std::size_t i = 0; i < outline.sections.size(); ++i) {
        outline.sections[i].index = static_cast<int>(i + 1);
        auto& subs = outline.sections[i].subsections;
        for (std::size_t j = 0; j < subs.size(); ++j) {
            subs[j].index = static_cast<int>(j + 1);
        }
    }
}

std::string raw_excerpt(const std::string& text) {
    std::string excerpt = text.substr(0, 400);
    return excerpt;
}

} // namespace

Outline parse_outline(const std::string& text) {
    ParsedLines parsed = scan_lines(text);
    if (parsed.sections.empty()) {
        throw ParseError("no recognizable Section lines in outline reply: " + raw_excerpt(text));
    }
    Outline outline;
    outline.title = parsed.title;
    outline.sections = std::move(parsed.sections);
    for (const Section& sec : outline.sections) {
        if (sec.description.empty()) {
            throw ParseError("section '" + sec.name + "' has no description: " +
                             raw_excerpt(text));
        }
        for (const Subsection& sub : sec.subsections) {
            if (sub.description.empty()) {
                throw ParseError("subsection '" + sub.name + "' has no description: " +
                                 raw_excerpt(text));
            }
        }
    }
    renumber(outline);
    return outline;
}

std::vector<Subsection> parse_subsections(const std::string& text) {
    ParsedLines parsed = scan_lines(text);
    std::vector<Subsection> subs = std::move(parsed.loose_subsections);
    // A stray "Section" header would route subsections into it; recover them.
    for (Section& sec : parsed.sections) {
        for (Subsection& sub : sec.subsections) subs.push_back(std::move(sub));
    }
    if (subs.empty()) {
        throw ParseError("no recognizable Subsection lines in reply: " + raw_excerpt(text));
    }
    for (const Subsection& sub : subs) {
        if (sub.description.empty()) {
            throw ParseError("subsection '" + sub.name + "' has no description: " +
                             raw_excerpt(text));
        }
    }
    for (std::size_t j = 0; j < subs.size(); ++j) subs[j].index = static_cast<int>(j + 1);
    return subs;
}

} // namespace surveygen
