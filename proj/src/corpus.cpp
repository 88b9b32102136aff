#include "surveygen/corpus.hpp"

#include <cctype>
#include <fstream>

#include <json.hpp>

#include "surveygen/errors.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

using json = nlohmann::json;

void Corpus::add(PaperRecord rec) {
    if (rec.id.empty()) {
        throw IngestError("record with empty id");
    }
    if (trim(rec.title).empty()) {
        throw IngestError("record '" + rec.id + "' has an empty title");
    }
    if (by_id_.count(rec.id) != 0) {
        throw IngestError("duplicate record id '" + rec.id + "'");
    }
    by_id_.emplace(rec.id, records_.size());
    records_.push_back(std::move(rec));
}

const PaperRecord* Corpus::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return nullptr;
    return &records_[it->second];
}

std::vector<const PaperRecord*> Corpus::visible() const {
    std::vector<const PaperRecord*> out;
    out.reserve(records_.size());
    for (const auto& rec : records_) {
        if (exclusions_.count(rec.id) == 0) out.push_back(&rec);
    }
    return out;
}

namespace {

std::string get_string(const json& j, const char* key, std::size_t line_no, bool required) {
    if (!j.contains(key)) {
        if (required) {
            throw ParseError("line " + std::to_string(line_no) + ": missing field \"" +
                             key + "\"");
        }
        return {};
    }
    const json& v = j.at(key);
    if (v.is_null()) return {};
    if (!v.is_string()) {
        throw ParseError("line " + std::to_string(line_no) + ": field \"" + key +
                         "\" is not a string");
    }
    return v.get<std::string>();
}

bool all_whitespace(std::string_view s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

} // namespace

Corpus ingest_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open corpus file: " + path.string());
    }

    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (all_whitespace(line)) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object()) {
            throw ParseError("line " + std::to_string(line_no) + ": not a JSON object");
        }

        PaperRecord rec;
        rec.id = get_string(j, "id", line_no, true);
        rec.title = get_string(j, "title", line_no, true);
        rec.abstract = get_string(j, "abstract", line_no, false);
        rec.body = get_string(j, "body", line_no, false);
        rec.published = get_string(j, "published", line_no, false);
        rec.url = get_string(j, "url", line_no, false);

        try {
            corpus.add(std::move(rec));
        } catch (const IngestError& e) {
            throw IngestError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return corpus;
}

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write corpus file: " + path.string());
    }
    for (const PaperRecord& rec : corpus.records()) {
        json j;
        j["id"] = rec.id;
        j["title"] = rec.title;
        j["abstract"] = rec.abstract;
        j["body"] = rec.body;
        j["published"] = rec.published;
        j["url"] = rec.url;
        out << j.dump() << '\n';
    }
}

std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string truncate_to_budget(std::string_view text, std::int64_t budget) {
    if (budget <= 0) return {};
    if (estimate_tokens(text) <= budget) return std::string(text);

    const std::size_t max_chars = static_cast<std::size_t>(budget) * 4;
    std::size_t cut = max_chars; // fallback: hard cut when no whitespace in range
    for (std::size_t p = max_chars;; --p) {
        if (std::isspace(static_cast<unsigned char>(text[p]))) {
            cut = p;
            break;
        }
        if (p == 0) break;
    }
    std::string out(text.substr(0, cut));
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

} // namespace surveygen
