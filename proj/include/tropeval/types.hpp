#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropeval {

// Shared across parsing/runner/metrics.
enum class Answer { yes, no };

enum class ParseStatus { clean, recovered, failed };

enum class QueryMode { multi_label, trope_wise };

enum class PromptMode { base, cot };

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

// One (synopsis, trope) cell of the label matrix.
struct Pair {
    std::string synopsis_id;
    std::string trope;

    auto operator<=>(const Pair&) const = default;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const char* to_string(Answer a) { return a == Answer::yes ? "yes" : "no"; }

inline const char* to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::clean: return "clean";
        case ParseStatus::recovered: return "recovered";
        default: return "failed";
    }
}

inline const char* to_string(QueryMode m) {
    return m == QueryMode::trope_wise ? "trope_wise" : "multi_label";
}

inline const char* to_string(PromptMode m) { return m == PromptMode::cot ? "cot" : "base"; }

std::optional<Answer> answer_from_string(const std::string& s);
std::optional<ParseStatus> parse_status_from_string(const std::string& s);
std::optional<QueryMode> query_mode_from_string(const std::string& s);
std::optional<PromptMode> prompt_mode_from_string(const std::string& s);

}  // namespace tropeval
