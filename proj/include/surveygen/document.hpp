#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace surveygen {

/// Ordered unique paper ids, numbered from 1 in order of first appearance.
class Bibliography {
public:
    /// Returns the entry number for the id, assigning the next one if new.
    int add(const std::string& id);

    std::optional<int> number_for(const std::string& id) const;
    /// nullptr when the number is out of range.
    const std::string* id_for(int number) const;

    const std::vector<std::string>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }

    bool operator==(const Bibliography&) const = default;

private:
    std::vector<std::string> ids_; // position p holds entry number p+1
    std::map<std::string, int> numbers_;
};

/// The merged (and eventually citation-resolved) survey: markdown text with
/// "## {k}. {name}" section and "### {k}.{m} {name}" subsection headings, plus
/// a "## References" section once resolved.
struct SurveyDocument {
    std::string title;
    std::string text;
    Bibliography bibliography;

    bool operator==(const SurveyDocument&) const = default;
};

} // namespace surveygen
