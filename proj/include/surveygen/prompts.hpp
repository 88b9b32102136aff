#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "surveygen/corpus.hpp"

namespace surveygen {

enum class TemplateName {
    kRoughOutline,
    kSubsectionOutline,
    kMergingOutline,
    kSubsectionWriting,
    kCitationReflection,
    kCoherencyRefinement,
};

const char* template_name_str(TemplateName name);

struct PromptTemplate {
    std::string name;
    std::string body;
    std::vector<std::string> placeholders; // declared slots; each occurs in body

    /// Throws Error when a declared placeholder does not occur in the body.
    void validate() const;
};

/// The built-in template for `name`.
const PromptTemplate& builtin_template(TemplateName name);

/// Built-ins, optionally overridden from a directory holding one UTF-8 text
/// file per template name ("{name}.txt" or bare "{name}").
class TemplateSet {
public:
    TemplateSet() = default;
    explicit TemplateSet(const std::optional<std::filesystem::path>& override_dir);

    const PromptTemplate& get(TemplateName name) const;

private:
    std::map<std::string, PromptTemplate> overrides_;
};

/// Literal, non-recursive substitution of the template's declared
/// placeholders. Throws RenderError naming the first placeholder without a
/// slot. Characters outside placeholder spans pass through untouched.
std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& slots);

enum class PaperField { kAbstract, kBody };

/// One reference block: "paper_title: {title}\n{content}". Body field falls
/// back to the abstract when the body is empty; content is truncated to
/// per_paper_budget when that is > 0.
std::string render_paper_block(const PaperRecord& paper, PaperField field,
                               std::int64_t per_paper_budget = 0);

/// Token cost of a paper inside a list (block + separator); the chunk packer
/// and the list renderer agree on this number.
std::int64_t paper_block_tokens(const PaperRecord& paper, PaperField field,
                                std::int64_t per_paper_budget = 0);

/// Blocks joined by blank lines, in order, dropping tail papers once the next
/// block would push the total over total_budget. Never truncates the list
/// structure mid-paper.
std::string render_paper_list(const std::vector<const PaperRecord*>& papers, PaperField field,
                              std::int64_t total_budget, std::int64_t per_paper_budget = 0);

// =============================================================================
// Outline
// =============================================================================

struct Subsection {
    int index = 0; // 1-based, contiguous within the section
    std::string name;
    std::string description;

    bool operator==(const Subsection&) const = default;
};

struct Section {
    int index = 0; // 1-based, contiguous
    std::string name;
    std::string description;
    std::vector<Subsection> subsections;

    bool operator==(const Section&) const = default;
};

struct Outline {
    std::string title;
    std::vector<Section> sections;

    bool operator==(const Outline&) const = default;
    std::size_t subsection_count() const;
};

/// Canonical text form: "Title:", then per section "Section k:"/
/// "Description k:" followed by its "Subsection m:"/"Description m:" pairs.
/// parse_outline(serialize(o)) == o.
std::string serialize(const Outline& outline);

/// Permissive line-oriented parse (case-insensitive keywords, <format> tag
/// stripping, surrounding prose tolerated, indices renumbered to order of
/// appearance) followed by strict validation: every section and subsection
/// needs a non-empty name and description. Throws ParseError, carrying the raw
/// text, when nothing parseable is found or validation fails.
Outline parse_outline(const std::string& text);

/// Same machinery for replies that carry only "Subsection k:" pairs.
std::vector<Subsection> parse_subsections(const std::string& text);

} // namespace surveygen
