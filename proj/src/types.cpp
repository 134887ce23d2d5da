#include "tropeval/types.hpp"

namespace tropeval {

std::optional<Answer> answer_from_string(const std::string& s) {
    if (s == "yes") return Answer::yes;
    if (s == "no") return Answer::no;
    return std::nullopt;
}

std::optional<ParseStatus> parse_status_from_string(const std::string& s) {
    if (s == "clean") return ParseStatus::clean;
    if (s == "recovered") return ParseStatus::recovered;
    if (s == "failed") return ParseStatus::failed;
    return std::nullopt;
}

std::optional<QueryMode> query_mode_from_string(const std::string& s) {
    if (s == "trope_wise") return QueryMode::trope_wise;
    if (s == "multi_label") return QueryMode::multi_label;
    return std::nullopt;
}

std::optional<PromptMode> prompt_mode_from_string(const std::string& s) {
    if (s == "base") return PromptMode::base;
    if (s == "cot") return PromptMode::cot;
    return std::nullopt;
}

}  // namespace tropeval
