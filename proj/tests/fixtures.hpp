#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "surveygen/corpus.hpp"
#include "surveygen/util.hpp"

namespace surveygen::testfix {

/// Deterministic synthetic corpus. Titles and abstracts are built from a small
/// vocabulary so the hash embedder produces meaningful overlaps.
inline Corpus synthetic_corpus(std::size_t n, std::uint64_t seed = 7) {
    static const char* kNouns[] = {"retrieval", "alignment", "reasoning", "compression",
                                   "evaluation", "planning",  "grounding", "adaptation"};
    static const char* kAreas[] = {"language models", "vision systems",   "recommender systems",
                                   "robotics",        "speech pipelines", "code assistants"};
    static const char* kVerbs[] = {"improves", "rethinks", "scales", "audits", "accelerates"};

    Rng rng(seed);
    Corpus corpus;
    for (std::size_t i = 0; i < n; ++i) {
        const char* noun = kNouns[rng.next_below(8)];
        const char* area = kAreas[rng.next_below(6)];
        const char* verb = kVerbs[rng.next_below(5)];

        PaperRecord rec;
        rec.id = "p" + std::to_string(i + 1);
        rec.title = std::string("Study ") + std::to_string(i + 1) + ": how " + noun + " " + verb +
                    " " + area;
        rec.abstract = std::string("We examine ") + noun + " for " + area +
                       ". Experiments show that " + noun + " " + verb + " " + area +
                       " across benchmarks. We analyze trade-offs and failure modes in detail.";
        rec.body = std::string("Introduction. This paper studies ") + noun + " in the context of " +
                   area + ". Method. Our approach " + verb +
                   " the standard setup. Results. Gains are consistent.";
        rec.published = "2024-0" + std::to_string(1 + (i % 9)) + "-01";
        corpus.add(std::move(rec));
    }
    return corpus;
}

/// Corpus including the worked example title used by the citation pipeline.
inline Corpus citation_fixture_corpus() {
    Corpus corpus = synthetic_corpus(12);
    PaperRecord palm;
    palm.id = "palm";
    palm.title = "PaLM: Scaling language modeling with pathways";
    palm.abstract = "Scaling dense language models to hundreds of billions of parameters.";
    palm.published = "2022-04-05";
    corpus.add(std::move(palm));
    return corpus;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("surveygen-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    const std::filesystem::path& path() const { return dir_; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path dir_;
};

} // namespace surveygen::testfix
