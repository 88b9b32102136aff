#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surveygen/corpus.hpp"
#include "surveygen/document.hpp"
#include "surveygen/gateway.hpp"

namespace surveygen {

/// A sentence with at least one resolvable numeric citation; the unit of
/// citation-quality judging.
struct Claim {
    std::string sentence;
    std::vector<std::string> refs; // sorted unique paper ids

    bool operator==(const Claim&) const = default;
};

/// Binary support verdict h(claim, reference subset). h(c, {}) = 0 by
/// definition and is never asked of the judge.
using SupportJudge = std::function<bool(const Claim&, const std::vector<std::string>& ref_ids)>;

/// Splits the document (headings and the References section excluded) into
/// sentences on `.?!` followed by whitespace, never splitting inside brackets;
/// a sentence becomes a Claim iff it cites at least one bibliography entry.
std::vector<Claim> extract_claims(const SurveyDocument& document);

/// (Σ h(c_i, Ref_i)) / |C|. Throws MetricError when there are no claims.
double citation_recall(const std::vector<Claim>& claims, const SupportJudge& judge);

/// Σ_i Σ_k [h(c_i, Ref_i) ∧ g(c_i, r_ik)] / Σ_i |Ref_i| with
/// g(c, r) = (h(c, {r}) = 1) ∨ (h(c, Ref∖{r}) = 0).
/// Throws MetricError when there are no citation pairs.
double citation_precision(const std::vector<Claim>& claims, const SupportJudge& judge);

struct CitationScores {
    double recall = 0.0;
    double precision = 0.0;
    std::int64_t claim_count = 0;
    std::int64_t citation_pair_count = 0;
};

/// Computes both metrics with a memoizing wrapper around the judge.
CitationScores citation_scores(const std::vector<Claim>& claims, const SupportJudge& judge);

// =============================================================================
// Rubric scoring
// =============================================================================

enum class RubricCriterion { kCoverage, kStructure, kRelevance };

const char* criterion_name(RubricCriterion c);

/// The five score descriptions for the criterion, as shown to the judge.
const std::string& rubric_text(RubricCriterion c);

/// Asks the judge model to grade the document 1-5 against the criterion.
/// Parses the first integer in the reply; one re-ask on parse failure, then
/// ProviderError.
int score_rubric(const std::string& document_text, RubricCriterion criterion, Gateway& judge);

struct RubricScores {
    double coverage = 0.0;
    double structure = 0.0;
    double relevance = 0.0;

    double overall() const { return (coverage + structure + relevance) / 3.0; }
    bool operator==(const RubricScores&) const = default;
};

/// Arithmetic mean per criterion across judges.
RubricScores aggregate_judges(const std::vector<RubricScores>& per_judge);

// =============================================================================
// Selection, meta-evaluation, speed model
// =============================================================================

struct CandidateScores {
    RubricScores rubric;
    std::optional<CitationScores> citation; // absent when the metrics were undefined
};

/// argmax of the overall rubric mean; ties broken by recall, then precision,
/// then lowest index.
std::size_t select_best(const std::vector<CandidateScores>& candidates);

/// Spearman's rank correlation with mid-rank tie handling (Pearson on
/// mid-ranks; reduces to 1 - 6Σd²/(n(n²-1)) when tie-free).
double spearman_rho(std::span<const double> a, std::span<const double> b);

struct SpeedEstimate {
    double time_hours = 0.0;
    double speed_per_hour = 0.0;
};

/// T_w = L/(E·M); Time = T_r + T_w + T_w/2; Speed = 1/Time.
SpeedEstimate speed_model(double length_tokens, double experts, double tokens_per_hour,
                          double research_hours);

inline constexpr double kDefaultExperts = 10.0;
inline constexpr double kDefaultTokensPerHour = 2000.0;
inline constexpr double kDefaultResearchHours = 5.0;

/// Production judge: prompts the gateway with the claim and each reference's
/// title + abstract + body (truncated to body_budget tokens) and reads a 0/1
/// verdict. An unparseable reply is re-asked once, then counted unsupported.
SupportJudge make_llm_support_judge(Gateway& gateway, const Corpus& corpus,
                                    std::int64_t body_budget = 1500);

/// Memoizes verdicts by (sentence, ref subset). Not thread-safe.
SupportJudge memoize_judge(SupportJudge judge);

} // namespace surveygen
