#pragma once

// Independent oracles used by the unit and acceptance suites. Everything here
// recomputes expected values from first principles and must stay decoupled
// from the implementation paths it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "surveygen/eval.hpp"
#include "surveygen/index.hpp"

namespace surveygen::testfix {

// ---------------------------------------------------------------------------
// Citation metrics: direct evaluation of the recall/precision definitions over
// an explicit truth table.
// ---------------------------------------------------------------------------

inline std::string subset_key(int claim, std::vector<std::string> refs) {
    std::sort(refs.begin(), refs.end());
    std::string key = std::to_string(claim) + "|";
    for (const auto& r : refs) key += r + ",";
    return key;
}

struct TruthInstance {
    std::vector<Claim> claims;
    std::map<std::string, bool> table; // (claim, sorted subset) -> h

    bool h(int i, const std::vector<std::string>& subset) const {
        if (subset.empty()) return false; // h(c, {}) = 0
        return table.at(subset_key(i, subset));
    }
};

/// Subsets a judge can ever be asked about for one claim: singletons,
/// minus-one complements, and the full set (deduplicated).
inline std::vector<std::vector<std::string>> relevant_subsets(
    const std::vector<std::string>& refs) {
    std::vector<std::vector<std::string>> subsets;
    auto push_unique = [&](std::vector<std::string> s) {
        std::sort(s.begin(), s.end());
        for (const auto& existing : subsets) {
            if (existing == s) return;
        }
        subsets.push_back(std::move(s));
    };
    push_unique(refs);
    for (const auto& r : refs) {
        push_unique({r});
        std::vector<std::string> rest;
        for (const auto& o : refs) {
            if (o != r) rest.push_back(o);
        }
        if (!rest.empty()) push_unique(rest);
    }
    return subsets;
}

inline double oracle_recall(const TruthInstance& inst) {
    int supported = 0;
    for (std::size_t i = 0; i < inst.claims.size(); ++i) {
        if (inst.h(static_cast<int>(i), inst.claims[i].refs)) ++supported;
    }
    return static_cast<double>(supported) / static_cast<double>(inst.claims.size());
}

inline double oracle_precision(const TruthInstance& inst) {
    int numerator = 0, pairs = 0;
    for (std::size_t i = 0; i < inst.claims.size(); ++i) {
        const auto& refs = inst.claims[i].refs;
        const bool full = inst.h(static_cast<int>(i), refs);
        for (const auto& r : refs) {
            ++pairs;
            std::vector<std::string> rest;
            for (const auto& o : refs) {
                if (o != r) rest.push_back(o);
            }
            const bool g =
                inst.h(static_cast<int>(i), {r}) || !inst.h(static_cast<int>(i), rest);
            if (full && g) ++numerator;
        }
    }
    return static_cast<double>(numerator) / static_cast<double>(pairs);
}

inline SupportJudge table_judge(const TruthInstance& inst) {
    std::map<std::string, int> claim_index;
    for (std::size_t i = 0; i < inst.claims.size(); ++i) {
        claim_index[inst.claims[i].sentence] = static_cast<int>(i);
    }
    return [&inst, claim_index](const Claim& claim, const std::vector<std::string>& refs) {
        return inst.h(claim_index.at(claim.sentence), refs);
    };
}

/// Builds the claim set for a ref-count shape plus the flat list of free
/// truth-table keys.
inline TruthInstance shape_instance(const std::vector<int>& refs_per_claim,
                                    std::vector<std::string>& keys_out) {
    TruthInstance inst;
    for (std::size_t i = 0; i < refs_per_claim.size(); ++i) {
        Claim c;
        c.sentence = "claim " + std::to_string(i);
        for (int k = 0; k < refs_per_claim[i]; ++k) {
            c.refs.push_back("c" + std::to_string(i) + "r" + std::to_string(k));
        }
        for (auto& subset : relevant_subsets(c.refs)) {
            keys_out.push_back(subset_key(static_cast<int>(i), subset));
        }
        inst.claims.push_back(std::move(c));
    }
    return inst;
}

// ---------------------------------------------------------------------------
// Retrieval: exhaustive scan with explicit ordering.
// ---------------------------------------------------------------------------

inline std::vector<ScoredId> oracle_topk(const VectorIndex& index, const EmbeddingVector& query,
                                         std::size_t k, IndexNamespace ns,
                                         const std::set<std::string>& exclusions = {}) {
    std::vector<ScoredId> all;
    for (const auto& [id, vec] : index.entries(ns)) {
        if (exclusions.count(id)) continue;
        float s = 0.0f;
        for (std::size_t d = 0; d < vec.size(); ++d) s += query[d] * vec[d];
        all.push_back({id, s});
    }
    std::sort(all.begin(), all.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

// ---------------------------------------------------------------------------
// Spearman: mid-ranks via direct counting, then the Pearson formula.
// ---------------------------------------------------------------------------

inline double oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double below = 0, equal = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (v[j] < v[i]) ++below;
                if (v[j] == v[i]) ++equal;
            }
            r[i] = 1.0 + below + (equal - 1.0) / 2.0;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

} // namespace surveygen::testfix
