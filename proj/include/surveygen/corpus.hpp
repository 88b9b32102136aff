#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace surveygen {

/// One publication in the database. Immutable once ingested.
struct PaperRecord {
    std::string id;
    std::string title;
    std::string abstract;
    std::string body;      // may be empty; drafting falls back to the abstract
    std::string published; // ISO-8601 date, may be empty
    std::string url;

    bool operator==(const PaperRecord&) const = default;
};

/// The publications database. Records are addressable by id; ids listed in the
/// exclusion set are never returned by retrieval.
class Corpus {
public:
    Corpus() = default;

    /// Appends a record, enforcing id uniqueness and a non-empty title.
    /// Throws IngestError on violation.
    void add(PaperRecord rec);

    const std::vector<PaperRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    /// nullptr when the id is unknown.
    const PaperRecord* find(std::string_view id) const;

    void exclude(const std::string& id) { exclusions_.insert(id); }
    bool is_excluded(const std::string& id) const { return exclusions_.count(id) != 0; }
    const std::set<std::string>& exclusions() const { return exclusions_; }

    /// Records minus exclusions, in ingest order. The retrieval-visible set.
    std::vector<const PaperRecord*> visible() const;

    bool operator==(const Corpus& other) const {
        return records_ == other.records_ && exclusions_ == other.exclusions_;
    }

private:
    std::vector<PaperRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::set<std::string> exclusions_;
};

/// Reads a JSONL corpus file (one record object per line, UTF-8).
/// Throws ParseError (with line number) on a malformed line and IngestError on
/// duplicate ids.
Corpus ingest_jsonl(const std::filesystem::path& path);

/// Writes the corpus back out in the same JSONL format; ingest ∘ write = id.
void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// Deterministic token estimate: ceil(byte-count / 4). Providers may substitute
/// exact counts; everything budget-related in the pipeline uses this one.
std::int64_t estimate_tokens(std::string_view text);

/// Longest prefix that ends on a whitespace boundary and fits the budget.
/// Identity when the text already fits; idempotent.
std::string truncate_to_budget(std::string_view text, std::int64_t budget);

} // namespace surveygen
