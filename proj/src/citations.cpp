#include "surveygen/citations.hpp"

#include <algorithm>
#include <cctype>

#include "surveygen/errors.hpp"
#include "surveygen/parallel.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

int Bibliography::add(const std::string& id) {
    auto it = numbers_.find(id);
    if (it != numbers_.end()) return it->second;
    ids_.push_back(id);
    const int number = static_cast<int>(ids_.size());
    numbers_.emplace(id, number);
    return number;
}

std::optional<int> Bibliography::number_for(const std::string& id) const {
    auto it = numbers_.find(id);
    if (it == numbers_.end()) return std::nullopt;
    return it->second;
}

const std::string* Bibliography::id_for(int number) const {
    if (number < 1 || static_cast<std::size_t>(number) > ids_.size()) return nullptr;
    return &ids_[static_cast<std::size_t>(number) - 1];
}

std::vector<CitationMention> scan_brackets(std::string_view text) {
    std::vector<CitationMention> out;
    std::size_t open = std::string_view::npos;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '[') {
            // A second '[' restarts the pair; nested brackets are not citations.
            open = i;
        } else if (text[i] == ']' && open != std::string_view::npos) {
            out.push_back({std::string(text.substr(open + 1, i - open - 1)), open, i + 1});
            open = std::string_view::npos;
        }
    }
    return out;
}

namespace {

bool purely_numeric(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

} // namespace

std::vector<CitationMention> extract_mentions(std::string_view text) {
    std::vector<CitationMention> out;
    for (CitationMention& m : scan_brackets(text)) {
        if (m.raw.size() < 3) continue;
        if (purely_numeric(m.raw)) continue;
        out.push_back(std::move(m));
    }
    return out;
}

ResolvedCitation resolve(const CitationMention& mention, const VectorIndex& title_index,
                         Embedder& embedder, float threshold,
                         const std::set<std::string>& exclusions) {
    ResolvedCitation result;
    result.mention = mention;
    auto hits = retrieve(title_index, embedder, mention.raw, 1, IndexNamespace::kTitle,
                         exclusions);
    if (hits.empty()) return result;
    result.similarity = hits.front().similarity;
    if (result.similarity >= threshold) {
        result.paper_id = hits.front().id;
    }
    return result;
}

SurveyDocument rewrite_and_bibliography(const SurveyDocument& document,
                                        const std::vector<ResolvedCitation>& resolutions,
                                        const Corpus& corpus) {
    // Resolutions must arrive in mention order; numbering follows first
    // appearance of each resolved paper.
    SurveyDocument out;
    out.title = document.title;

    const std::string& text = document.text;
    std::string rewritten;
    rewritten.reserve(text.size());
    std::size_t cursor = 0;
    for (const ResolvedCitation& r : resolutions) {
        if (r.mention.end > text.size() || r.mention.begin >= r.mention.end) {
            throw Error("citation rewrite: resolution span out of range");
        }
        rewritten.append(text, cursor, r.mention.begin - cursor);
        if (r.resolved()) {
            const int number = out.bibliography.add(r.paper_id);
            rewritten += "[" + std::to_string(number) + "]";
        } else {
            log_warn("dropping unresolved citation \"" + r.mention.raw + "\" (similarity " +
                     std::to_string(r.similarity) + ")");
        }
        cursor = r.mention.end;
    }
    rewritten.append(text, cursor, text.size() - cursor);

    rewritten += "\n## References\n\n";
    for (std::size_t i = 0; i < out.bibliography.ids().size(); ++i) {
        const std::string& id = out.bibliography.ids()[i];
        const PaperRecord* rec = corpus.find(id);
        const std::string title = rec != nullptr ? rec->title : id;
        rewritten += "[" + std::to_string(i + 1) + "] " + title + "\n";
    }
    out.text = std::move(rewritten);
    return out;
}

SurveyDocument resolve_document(const SurveyDocument& document, const VectorIndex& index,
                                Embedder& embedder, const Corpus& corpus, float threshold) {
    // Unbalanced brackets stay verbatim; note them for debugging.
    std::size_t opens = 0, pairs = 0;
    for (char c : document.text) {
        if (c == '[') ++opens;
    }
    pairs = scan_brackets(document.text).size();
    if (opens > pairs) {
        log_warn(std::to_string(opens - pairs) +
                 " unmatched '[' left verbatim during citation resolution");
    }

    auto mentions = extract_mentions(document.text);
    std::vector<ResolvedCitation> resolutions(mentions.size());
    auto errors = run_parallel(mentions.size(), [&](std::size_t i) {
        resolutions[i] = resolve(mentions[i], index, embedder, threshold, corpus.exclusions());
    });
    for (const std::exception_ptr& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return rewrite_and_bibliography(document, resolutions, corpus);
}

} // namespace surveygen
