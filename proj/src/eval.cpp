#include "surveygen/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <set>

#include "surveygen/citations.hpp"
#include "surveygen/errors.hpp"
#include "surveygen/prompts.hpp"
#include "surveygen/stage_context.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

// =============================================================================
// Claims
// =============================================================================

namespace {

/// Document body relevant for claims: everything before "## References", with
/// heading lines removed.
std::string claim_scope(const std::string& text) {
    std::string scope = text;
    auto refs_pos = scope.find("\n## References");
    if (refs_pos != std::string::npos) scope.resize(refs_pos);

    std::string out;
    out.reserve(scope.size());
    for (const std::string& line : split_lines(scope)) {
        const std::string t = trim(line);
        if (!t.empty() && t.front() == '#') continue;
        out += line;
        out += '\n';
    }
    return out;
}

bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '[') {
            depth = 1;
        } else if (c == ']') {
            depth = 0;
        } else if (is_terminator(c) && depth == 0) {
            const bool boundary = i + 1 >= text.size() ||
                                  std::isspace(static_cast<unsigned char>(text[i + 1]));
            if (boundary) {
                std::string s = trim(text.substr(start, i + 1 - start));
                if (!s.empty()) sentences.push_back(std::move(s));
                start = i + 1;
            }
        }
    }
    std::string tail = trim(text.substr(start));
    if (!tail.empty()) sentences.push_back(std::move(tail));
    return sentences;
}

} // namespace

std::vector<Claim> extract_claims(const SurveyDocument& document) {
    std::vector<Claim> claims;
    for (std::string& sentence : split_sentences(claim_scope(document.text))) {
        std::set<std::string> refs;
        for (const CitationMention& m : scan_brackets(sentence)) {
            if (m.raw.empty() || m.raw.size() > 9) continue;
            bool numeric = std::all_of(m.raw.begin(), m.raw.end(), [](char c) {
                return std::isdigit(static_cast<unsigned char>(c));
            });
            if (!numeric) continue;
            const std::string* id = document.bibliography.id_for(std::stoi(m.raw));
            if (id != nullptr) refs.insert(*id);
        }
        if (refs.empty()) continue;
        claims.push_back({std::move(sentence), {refs.begin(), refs.end()}});
    }
    return claims;
}

// =============================================================================
// Citation quality (recall / precision)
// =============================================================================

namespace {

bool judge_or_zero(const SupportJudge& judge, const Claim& claim,
                   const std::vector<std::string>& subset) {
    if (subset.empty()) return false; // h(c, {}) = 0 by definition
    return judge(claim, subset);
}

} // namespace

double citation_recall(const std::vector<Claim>& claims, const SupportJudge& judge) {
    if (claims.empty()) {
        throw MetricError("citation recall undefined: no claims");
    }
    std::int64_t supported = 0;
    for (const Claim& claim : claims) {
        if (judge_or_zero(judge, claim, claim.refs)) ++supported;
    }
    return static_cast<double>(supported) / static_cast<double>(claims.size());
}

double citation_precision(const std::vector<Claim>& claims, const SupportJudge& judge) {
    std::int64_t pairs = 0;
    for (const Claim& claim : claims) pairs += static_cast<std::int64_t>(claim.refs.size());
    if (pairs == 0) {
        throw MetricError("citation precision undefined: no citation pairs");
    }
    std::int64_t numerator = 0;
    for (const Claim& claim : claims) {
        const bool full_support = judge_or_zero(judge, claim, claim.refs);
        for (const std::string& ref : claim.refs) {
            const bool alone = judge_or_zero(judge, claim, {ref});
            std::vector<std::string> rest;
            rest.reserve(claim.refs.size() - 1);
            for (const std::string& other : claim.refs) {
                if (other != ref) rest.push_back(other);
            }
            const bool relevant = alone || !judge_or_zero(judge, claim, rest);
            if (full_support && relevant) ++numerator;
        }
    }
    return static_cast<double>(numerator) / static_cast<double>(pairs);
}

CitationScores citation_scores(const std::vector<Claim>& claims, const SupportJudge& judge) {
    SupportJudge cached = memoize_judge(judge);
    CitationScores scores;
    scores.claim_count = static_cast<std::int64_t>(claims.size());
    for (const Claim& c : claims) {
        scores.citation_pair_count += static_cast<std::int64_t>(c.refs.size());
    }
    scores.recall = citation_recall(claims, cached);
    scores.precision = citation_precision(claims, cached);
    return scores;
}

// =============================================================================
// Rubric scoring
// =============================================================================

namespace {

const std::string kCoverageRubric =
    "Score 1: The survey has very limited coverage, only touching on a small portion of the "
    "topic and lacking discussion on key areas.\n"
    "Score 2: The survey covers some parts of the topic but has noticeable omissions, with "
    "significant areas either underrepresented or missing.\n"
    "Score 3: The survey is generally comprehensive in coverage but still misses a few key "
    "points that are not fully discussed.\n"
    "Score 4: The survey covers most key areas of the topic comprehensively, with only very "
    "minor topics left out.\n"
    "Score 5: The survey comprehensively covers all key and peripheral topics, providing "
    "detailed discussions and extensive information.";

const std::string kStructureRubric =
    "Score 1: The survey lacks logic, with no clear connections between sections, making it "
    "difficult to understand the overall framework.\n"
    "Score 2: The survey has weak logical flow with some content arranged in a disordered or "
    "unreasonable manner.\n"
    "Score 3: The survey has a generally reasonable logical structure, with most content "
    "arranged orderly, though some links and transitions could be improved such as repeated "
    "subsections.\n"
    "Score 4: The survey has good logical consistency, with content well arranged and natural "
    "transitions, only slightly rigid in a few parts.\n"
    "Score 5: The survey is tightly structured and logically clear, with all sections and "
    "content arranged most reasonably, and transitions between adjacent sections smooth "
    "without redundancy.";

const std::string kRelevanceRubric =
    "Score 1: The content is outdated or unrelated to the field it purports to review, "
    "offering no alignment with the topic.\n"
    "Score 2: The survey is somewhat on topic but with several digressions; the core subject "
    "is evident but not consistently adhered to.\n"
    "Score 3: The survey is generally on topic, despite a few unrelated details.\n"
    "Score 4: The survey is mostly on topic and focused; the narrative has a consistent "
    "relevance to the core subject with infrequent digressions.\n"
    "Score 5: The survey is exceptionally focused and entirely on topic; the article is "
    "tightly centered on the subject, with every piece of information contributing to a "
    "comprehensive understanding of the topic.";

std::optional<int> first_integer(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
        int value = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            value = value * 10 + (text[i] - '0');
            ++i;
        }
        return value;
    }
    return std::nullopt;
}

} // namespace

const char* criterion_name(RubricCriterion c) {
    switch (c) {
        case RubricCriterion::kCoverage: return "coverage";
        case RubricCriterion::kStructure: return "structure";
        case RubricCriterion::kRelevance: return "relevance";
    }
    return "unknown";
}

const std::string& rubric_text(RubricCriterion c) {
    switch (c) {
        case RubricCriterion::kCoverage: return kCoverageRubric;
        case RubricCriterion::kStructure: return kStructureRubric;
        case RubricCriterion::kRelevance: return kRelevanceRubric;
    }
    return kCoverageRubric;
}

int score_rubric(const std::string& document_text, RubricCriterion criterion, Gateway& judge) {
    std::string prompt = "You are judging the quality of an academic survey.\n";
    prompt += "Criterion: ";
    prompt += criterion_name(criterion);
    prompt += "\n";
    prompt += rubric_text(criterion);
    prompt += "\nSurvey:\n---\n";
    prompt += document_text;
    prompt += "\n---\nRespond with a single integer score from 1 to 5 for the criterion above.";

    ChatRequest req;
    req.stage = stages::kRubricJudge;
    req.messages.push_back({"user", prompt});

    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string reply = judge.complete(req).text;
        auto value = first_integer(reply);
        if (value.has_value() && *value >= 1 && *value <= 5) return *value;
        log_warn(std::string("rubric judge reply carried no 1-5 score") +
                 (attempt == 0 ? ", re-asking" : ""));
    }
    throw ProviderError(std::string("rubric judge produced no usable score for ") +
                        criterion_name(criterion));
}

RubricScores aggregate_judges(const std::vector<RubricScores>& per_judge) {
    if (per_judge.empty()) {
        throw MetricError("aggregate_judges: no judges");
    }
    RubricScores out;
    for (const RubricScores& s : per_judge) {
        out.coverage += s.coverage;
        out.structure += s.structure;
        out.relevance += s.relevance;
    }
    const double n = static_cast<double>(per_judge.size());
    out.coverage /= n;
    out.structure /= n;
    out.relevance /= n;
    return out;
}

// =============================================================================
// Selection
// =============================================================================

std::size_t select_best(const std::vector<CandidateScores>& candidates) {
    if (candidates.empty()) {
        throw MetricError("select_best: no candidates");
    }
    auto recall_of = [](const CandidateScores& c) {
        return c.citation.has_value() ? c.citation->recall : -1.0;
    };
    auto precision_of = [](const CandidateScores& c) {
        return c.citation.has_value() ? c.citation->precision : -1.0;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double oi = candidates[i].rubric.overall();
        const double ob = candidates[best].rubric.overall();
        if (oi > ob) {
            best = i;
        } else if (oi == ob) {
            if (recall_of(candidates[i]) > recall_of(candidates[best])) {
                best = i;
            } else if (recall_of(candidates[i]) == recall_of(candidates[best]) &&
                       precision_of(candidates[i]) > precision_of(candidates[best])) {
                best = i;
            }
        }
    }
    return best;
}

// =============================================================================
// Spearman
// =============================================================================

namespace {

std::vector<double> mid_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

bool has_ties(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

} // namespace

double spearman_rho(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw MetricError("spearman_rho: rankings differ in length");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw MetricError("spearman_rho: need at least 2 entries");
    }

    const std::vector<double> ra = mid_ranks(a);
    const std::vector<double> rb = mid_ranks(b);

    if (!has_ties(a) && !has_ties(b)) {
        // Tie-free fast path.
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = ra[i] - rb[i];
            d2 += d * d;
        }
        const double nn = static_cast<double>(n);
        return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
    }

    const double mean = (static_cast<double>(n) + 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) {
        throw MetricError("spearman_rho: constant ranking has undefined correlation");
    }
    return cov / std::sqrt(va * vb);
}

// =============================================================================
// Speed model
// =============================================================================

SpeedEstimate speed_model(double length_tokens, double experts, double tokens_per_hour,
                          double research_hours) {
    if (experts <= 0.0 || tokens_per_hour <= 0.0) {
        throw MetricError("speed_model: experts and tokens/hour must be positive");
    }
    const double writing_hours = length_tokens / (experts * tokens_per_hour);
    SpeedEstimate est;
    est.time_hours = research_hours + writing_hours + writing_hours / 2.0;
    if (est.time_hours <= 0.0) {
        throw MetricError("speed_model: non-positive total time");
    }
    est.speed_per_hour = 1.0 / est.time_hours;
    return est;
}

// =============================================================================
// Judges
// =============================================================================

SupportJudge make_llm_support_judge(Gateway& gateway, const Corpus& corpus,
                                    std::int64_t body_budget) {
    return [&gateway, &corpus, body_budget](const Claim& claim,
                                            const std::vector<std::string>& ref_ids) -> bool {
        std::string refs_text;
        for (const std::string& id : ref_ids) {
            const PaperRecord* rec = corpus.find(id);
            if (rec == nullptr) continue;
            if (!refs_text.empty()) refs_text += "\n\n";
            refs_text += "paper_title: " + rec->title + "\n" + rec->abstract;
            if (!rec->body.empty()) {
                refs_text += "\n" + truncate_to_budget(rec->body, body_budget);
            }
        }
        std::string prompt = "You are verifying citations in an academic survey.\n";
        prompt += "Claim:\n---\n" + claim.sentence + "\n---\n";
        prompt += "References:\n---\n" + refs_text + "\n---\n";
        prompt += "Answer with a single character: 1 if the references support the claim, 0 "
                  "otherwise.";

        ChatRequest req;
        req.stage = stages::kSupportJudge;
        req.messages.push_back({"user", prompt});
        for (int attempt = 0; attempt < 2; ++attempt) {
            const std::string reply = gateway.complete(req).text;
            for (char c : reply) {
                if (c == '1') return true;
                if (c == '0') return false;
            }
            const std::string lowered = to_lower(reply);
            if (contains(lowered, "yes")) return true;
            if (contains(lowered, "no")) return false;
        }
        log_warn("support judge gave no verdict twice; counting the claim unsupported");
        return false;
    };
}

SupportJudge memoize_judge(SupportJudge judge) {
    auto cache = std::make_shared<std::map<std::string, bool>>();
    return [judge = std::move(judge), cache](const Claim& claim,
                                             const std::vector<std::string>& ref_ids) -> bool {
        std::string key = claim.sentence;
        key += '\x1f';
        for (const std::string& id : ref_ids) {
            key += id;
            key += '\x1e';
        }
        auto it = cache->find(key);
        if (it != cache->end()) return it->second;
        const bool verdict = judge(claim, ref_ids);
        cache->emplace(std::move(key), verdict);
        return verdict;
    };
}

} // namespace surveygen
