#include "surveygen/mock_provider.hpp"

#include <algorithm>
#include <thread>

#include "surveygen/corpus.hpp"
#include "surveygen/errors.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

namespace {

// Fixed fragments of the built-in templates, used to recognize prompt kinds.
constexpr const char* kRoughOutlineMarker = "You need to draft a outline based on the given papers";
constexpr const char* kSubsectionOutlineMarker =
    "You need to generate the framwork containing several subsections";
constexpr const char* kMergeMarker = "You need to generate a final outline based on these provided outlines";
constexpr const char* kWritingMarker = "Now you need to write the content for the subsection";
constexpr const char* kReflectionMarker = "Now you need to check whether the citations";
constexpr const char* kCoherencyMarker = "Now refine the subsection to enhance coherence";
constexpr const char* kSupportJudgeMarker = "Answer with a single character: 1 if the references support the claim";
constexpr const char* kRubricJudgeMarker = "Respond with a single integer score from 1 to 5";
constexpr const char* kBaselineMarker = "write the line END_OF_SURVEY";

std::string first_line_capture(const std::string& prompt, const std::string& before,
                               char stop = '.') {
    auto pos = prompt.find(before);
    if (pos == std::string::npos) return {};
    pos += before.size();
    auto end = prompt.find_first_of(std::string(1, stop) + "\n", pos);
    if (end == std::string::npos) end = prompt.size();
    return trim(prompt.substr(pos, end - pos));
}

std::string extract_topic(const std::string& prompt) {
    std::string topic = first_line_capture(prompt, "survey about ");
    return topic.empty() ? "the topic" : topic;
}

int extract_section_count(const std::string& prompt) {
    auto pos = prompt.find("contains ");
    while (pos != std::string::npos) {
        auto rest = prompt.substr(pos + 9, 16);
        int value = 0;
        std::size_t digits = 0;
        while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') {
            value = value * 10 + (rest[digits] - '0');
            ++digits;
        }
        if (digits > 0 && rest.compare(digits, 9, " sections") == 0) return value;
        pos = prompt.find("contains ", pos + 1);
    }
    return 8;
}

std::vector<std::string> extract_paper_titles(const std::string& prompt, std::size_t limit) {
    std::vector<std::string> titles;
    for (const std::string& line : split_lines(prompt)) {
        std::string t = trim(line);
        if (t.rfind("paper_title: ", 0) == 0) {
            titles.push_back(trim(t.substr(13)));
            if (titles.size() >= limit) break;
        }
    }
    return titles;
}

/// Text between the first pair of "---" fence lines after `marker`.
std::string fenced_block_after(const std::string& prompt, const std::string& marker) {
    auto pos = prompt.find(marker);
    if (pos == std::string::npos) return {};
    auto open = prompt.find("---", pos);
    if (open == std::string::npos) return {};
    auto start = prompt.find('\n', open);
    if (start == std::string::npos) return {};
    ++start;
    auto close = prompt.find("\n---", start);
    if (close == std::string::npos) return trim(prompt.substr(start));
    return trim(prompt.substr(start, close - start));
}

const char* kSectionThemes[] = {
    "Foundations of", "Core Methods in",       "Applications of",        "Evaluation of",
    "Systems for",    "Open Challenges in",    "Emerging Directions in", "Synthesis of",
    "Benchmarks for", "Theoretical Aspects of"};

std::string fill_rough_outline(const std::string& prompt) {
    const std::string topic = extract_topic(prompt);
    const int n = extract_section_count(prompt);
    std::string out = "Title: A Survey of " + topic + "\n";
    for (int i = 1; i <= n; ++i) {
        const char* theme = kSectionThemes[(i - 1) % 10];
        out += "Section " + std::to_string(i) + ": " + theme + " " + topic + "\n";
        out += "Description " + std::to_string(i) + ": Discusses " + to_lower(theme) + " " +
               topic + " with representative work.\n";
    }
    return out;
}

std::string fill_merge(const std::string& prompt) {
    // Echo the first candidate outline (up to the first inner "---" separator).
    std::string block = fenced_block_after(prompt, "list of outlines as candidates");
    auto sep = block.find("\n---");
    if (sep != std::string::npos) block = trim(block.substr(0, sep));
    if (!block.empty()) return block;
    return fill_rough_outline(prompt);
}

std::string fill_subsection_outline(const std::string& prompt) {
    std::string section = first_line_capture(prompt, "You need to enrich the section ");
    if (section.empty()) section = "the section";
    std::string out;
    out += "Subsection 1: " + section + " Overview\n";
    out += "Description 1: An overview of " + section + ".\n";
    out += "Subsection 2: Representative Approaches\n";
    out += "Description 2: Representative approaches within " + section + ".\n";
    out += "Subsection 3: Outlook\n";
    out += "Description 3: Open problems and outlook for " + section + ".\n";
    return out;
}

std::string fill_writing(const std::string& prompt) {
    std::string name = first_line_capture(prompt, "for the subsection:\n", '\n');
    if (!name.empty() && name.front() == '"') {
        auto close = name.find('"', 1);
        if (close != std::string::npos) name = name.substr(1, close - 1);
    }
    if (name.empty()) name = "This subsection";
    auto titles = extract_paper_titles(prompt, 3);
    std::string out = name + " has become an active line of research";
    if (!titles.empty()) out += " [" + titles[0] + "]";
    out += ". Several studies examine methods and trade-offs in depth";
    if (titles.size() > 1) out += " [" + titles[1] + "]";
    out += ". Open questions remain and motivate continued work";
    if (titles.size() > 2) out += " [" + titles[2] + "]";
    out += ".";
    return out;
}

std::string fill_baseline(const std::string& prompt) {
    auto titles = extract_paper_titles(prompt, 2);
    const std::string tag = std::to_string(fnv1a64(prompt) % 1000);
    std::string out = "Continuing the survey, segment " + tag +
                      ". The literature covers a broad set of methods and findings";
    if (!titles.empty()) out += " [" + titles[0] + "]";
    out += ". Follow-up studies extend these results to new settings";
    if (titles.size() > 1) out += " [" + titles[1] + "]";
    out += ". Further analysis highlights practical considerations, limitations, and "
           "directions that future work can address in more depth.";
    return out;
}

} // namespace

std::string deterministic_fill(const std::string& prompt) {
    if (contains(prompt, kMergeMarker)) return fill_merge(prompt);
    if (contains(prompt, kRoughOutlineMarker)) return fill_rough_outline(prompt);
    if (contains(prompt, kSubsectionOutlineMarker)) return fill_subsection_outline(prompt);
    if (contains(prompt, kWritingMarker)) return fill_writing(prompt);
    if (contains(prompt, kReflectionMarker)) {
        return fenced_block_after(prompt, "You have written a subsection below:");
    }
    if (contains(prompt, kCoherencyMarker)) {
        return fenced_block_after(prompt, "Subsection to Refine:");
    }
    if (contains(prompt, kSupportJudgeMarker)) {
        const std::string claim = fenced_block_after(prompt, "Claim:");
        return fnv1a64(claim) % 5 == 0 ? "0" : "1";
    }
    if (contains(prompt, kRubricJudgeMarker)) {
        return std::to_string(3 + static_cast<int>(fnv1a64(prompt) % 3));
    }
    if (contains(prompt, kBaselineMarker)) return fill_baseline(prompt);
    // Unknown prompt shape: echo a stable token so tests fail visibly.
    return "mock-reply-" + std::to_string(fnv1a64(prompt) % 100000);
}

std::string flatten_request(const ChatRequest& req) {
    std::string out;
    for (const ChatMessage& m : req.messages) {
        if (!out.empty()) out += "\n";
        out += m.text;
    }
    return out;
}

void MockTransport::script(const std::string& stage, std::string reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    stage_scripts_[stage].push_back(std::move(reply));
}

void MockTransport::when_contains(std::string needle, std::string reply, int times) {
    std::lock_guard<std::mutex> lock(mutex_);
    rules_.push_back({std::move(needle), std::move(reply), "", times, false, 0});
}

void MockTransport::echo_block_when(std::string needle, std::string marker, int times) {
    std::lock_guard<std::mutex> lock(mutex_);
    rules_.push_back({std::move(needle), "", std::move(marker), times, false, 0});
}

void MockTransport::fail_transient_when(std::string needle, int times) {
    std::lock_guard<std::mutex> lock(mutex_);
    rules_.push_back({std::move(needle), "", "", -1, false, times});
}

void MockTransport::refuse_when(std::string needle, std::string body) {
    std::lock_guard<std::mutex> lock(mutex_);
    rules_.push_back({std::move(needle), std::move(body), "", -1, true, 0});
}

int MockTransport::chat_calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

int MockTransport::max_inflight() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return max_inflight_;
}

std::vector<ChatRequest> MockTransport::requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return seen_;
}

std::string MockTransport::last_prompt_containing(const std::string& needle) const {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto it = seen_.rbegin(); it != seen_.rend(); ++it) {
        std::string prompt = flatten_request(*it);
        if (contains(prompt, needle)) return prompt;
    }
    return {};
}

std::string MockTransport::resolve_reply(const std::string& prompt, const std::string& stage) {
    // Caller holds the lock.
    if (global_failures_ > 0) {
        --global_failures_;
        throw TransientError("injected transient failure");
    }
    for (Rule& rule : rules_) {
        if (rule.fail_times > 0 && contains(prompt, rule.needle)) {
            --rule.fail_times;
            throw TransientError("injected transient failure for '" + rule.needle + "'");
        }
    }
    auto script_it = stage_scripts_.find(stage);
    if (script_it != stage_scripts_.end() && !script_it->second.empty()) {
        std::string reply = std::move(script_it->second.front());
        script_it->second.pop_front();
        return reply;
    }
    for (Rule& rule : rules_) {
        if (rule.fail_times > 0 || rule.remaining == 0) continue;
        if (!contains(prompt, rule.needle)) continue;
        if (rule.refuse) throw ProviderError(rule.reply);
        if (rule.remaining > 0) --rule.remaining;
        if (!rule.echo_marker.empty()) return fenced_block_after(prompt, rule.echo_marker);
        return rule.reply;
    }
    return deterministic_fill(prompt);
}

ChatResponse MockTransport::send_chat(const ProviderConfig&, const ChatRequest& req) {
    const std::string prompt = flatten_request(req);
    std::string reply;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++calls_;
        ++inflight_;
        max_inflight_ = std::max(max_inflight_, inflight_);
        seen_.push_back(req);
        try {
            reply = resolve_reply(prompt, req.stage);
        } catch (...) {
            --inflight_;
            throw;
        }
    }
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        --inflight_;
    }
    ChatResponse resp;
    resp.text = std::move(reply);
    resp.prompt_tokens = estimate_tokens(prompt);
    resp.completion_tokens = estimate_tokens(resp.text);
    return resp;
}

std::vector<EmbeddingVector> MockTransport::send_embed(const ProviderConfig&,
                                                       const std::vector<std::string>& texts) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (global_failures_ > 0) {
            --global_failures_;
            throw TransientError("injected transient failure");
        }
    }
    return embedder_.embed(texts);
}

} // namespace surveygen
