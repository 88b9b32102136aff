#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "surveygen/corpus.hpp"
#include "surveygen/document.hpp"
#include "surveygen/embedding.hpp"
#include "surveygen/index.hpp"

namespace surveygen {

struct CitationMention {
    std::string raw;        // text inside the brackets
    std::size_t begin = 0;  // offset of '['
    std::size_t end = 0;    // one past ']'

    bool operator==(const CitationMention&) const = default;
};

/// Every non-nested bracket pair, left to right. Unbalanced brackets are left
/// alone (and a '[' without ']' is simply not a pair).
std::vector<CitationMention> scan_brackets(std::string_view text);

/// scan_brackets filtered to citation candidates: content of at least 3
/// characters and not purely numeric (numeric brackets are already-resolved
/// keys, which keeps the resolver idempotent).
std::vector<CitationMention> extract_mentions(std::string_view text);

struct ResolvedCitation {
    CitationMention mention;
    std::string paper_id; // empty when unresolved
    float similarity = 0.0f;

    bool resolved() const { return !paper_id.empty(); }
};

inline constexpr float kDefaultResolveThreshold = 0.5f;

/// Nearest corpus title by cosine in the title namespace; ties go to the
/// lexicographically smallest id. Below the threshold the mention stays
/// unresolved. Threshold 0 reproduces unconditional closest-title mapping.
ResolvedCitation resolve(const CitationMention& mention, const VectorIndex& title_index,
                         Embedder& embedder, float threshold = kDefaultResolveThreshold,
                         const std::set<std::string>& exclusions = {});

/// Replaces each resolved mention's bracket content with its bibliography number
/// (first-appearance order, duplicates collapsed), removes unresolved mentions
/// with a warning, and appends a "## References" section listing "[n] {title}".
/// Characters outside bracket spans are untouched.
SurveyDocument rewrite_and_bibliography(const SurveyDocument& document,
                                        const std::vector<ResolvedCitation>& resolutions,
                                        const Corpus& corpus);

/// extract → resolve (in parallel) → rewrite, in one call.
SurveyDocument resolve_document(const SurveyDocument& document, const VectorIndex& index,
                                Embedder& embedder, const Corpus& corpus,
                                float threshold = kDefaultResolveThreshold);

} // namespace surveygen
