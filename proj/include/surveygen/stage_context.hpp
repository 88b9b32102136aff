#pragma once

#include <string>

#include "surveygen/corpus.hpp"
#include "surveygen/embedding.hpp"
#include "surveygen/gateway.hpp"
#include "surveygen/index.hpp"
#include "surveygen/prompts.hpp"

namespace surveygen {

/// Everything a pipeline stage needs to run. All references outlive the stage.
struct StageContext {
    std::string topic;
    const Corpus& corpus;
    const VectorIndex& index;
    Embedder& embedder;
    Gateway& gateway;
    const TemplateSet& templates;
};

/// Ledger stage tags, shared by the stages and the mock scripts.
namespace stages {
inline constexpr const char* kRoughOutline = "outline.rough";
inline constexpr const char* kMergeOutline = "outline.merge";
inline constexpr const char* kSubsectionOutline = "outline.subsection";
inline constexpr const char* kDraft = "draft";
inline constexpr const char* kReflect = "refine.reflect";
inline constexpr const char* kPolish = "refine.polish";
inline constexpr const char* kSupportJudge = "judge.support";
inline constexpr const char* kRubricJudge = "judge.rubric";
inline constexpr const char* kBaseline = "baseline";
inline constexpr const char* kEmbed = "embed";
} // namespace stages

} // namespace surveygen
