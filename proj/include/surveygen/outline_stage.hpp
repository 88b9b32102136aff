#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surveygen/prompts.hpp"
#include "surveygen/stage_context.hpp"

namespace surveygen {

/// A seeded, budget-respecting partition of paper ids: papers are shuffled by
/// the seed, then packed greedily in shuffled order. Every chunk's rendered
/// abstract list fits window_budget unless the chunk is a single oversized
/// paper.
struct ChunkPlan {
    std::uint64_t seed = 0;
    std::int64_t window_budget = 0;
    std::vector<std::vector<std::string>> chunks; // paper ids
};

ChunkPlan chunk_papers(const std::vector<const PaperRecord*>& papers, std::int64_t window_budget,
                       std::uint64_t seed);

struct OutlineParams {
    int k_init = 1200;
    std::int64_t window_budget = 30000;
    int section_count = 8;
    int k_enrich = 60; // papers per section-enrichment call
    std::uint64_t seed = 0;
};

/// Phase 1: retrieve the topic pool, draft one rough outline per chunk in
/// parallel, merge the candidates into a final outline with exactly
/// section_count sections, then enrich every section with subsections.
Outline generate_outline(const StageContext& ctx, const OutlineParams& params);

} // namespace surveygen
