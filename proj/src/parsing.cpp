#include "tropeval/parsing.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "tropeval/text.hpp"

namespace tropeval {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

bool is_token_char(unsigned char c) { return std::isalnum(c) != 0; }

struct TokenHit {
    size_t pos;
    Answer answer;
};

// Word-bounded, case-insensitive yes/no occurrences in order of appearance.
std::vector<TokenHit> answer_tokens(const std::string& raw) {
    std::vector<TokenHit> hits;
    const std::string lower = text::to_lower(raw);
    for (size_t i = 0; i < lower.size(); ++i) {
        auto bounded = [&](size_t begin, size_t len) {
            bool left_ok = begin == 0 || !is_token_char(static_cast<unsigned char>(lower[begin - 1]));
            size_t end = begin + len;
            bool right_ok = end >= lower.size() || !is_token_char(static_cast<unsigned char>(lower[end]));
            return left_ok && right_ok;
        };
        if (lower.compare(i, 3, "yes") == 0 && bounded(i, 3)) {
            hits.push_back({i, Answer::yes});
        } else if (lower.compare(i, 2, "no") == 0 && bounded(i, 2)) {
            hits.push_back({i, Answer::no});
        }
    }
    return hits;
}

// Position of the first content character, past opening quotes/markup.
size_t leading_content_pos(const std::string& raw) {
    size_t i = 0;
    while (i < raw.size()) {
        unsigned char c = static_cast<unsigned char>(raw[i]);
        if (std::isspace(c) || c == '"' || c == '\'' || c == '*' || c == '(' || c == '[' ||
            c == '-' || c == '>' || c == '#') {
            ++i;
        } else {
            break;
        }
    }
    return i;
}

std::optional<std::string> explanation_after(const std::string& raw, size_t token_end) {
    size_t i = token_end;
    while (i < raw.size()) {
        unsigned char c = static_cast<unsigned char>(raw[i]);
        if (std::isspace(c) || c == '.' || c == ',' || c == ':' || c == ';' || c == '-' ||
            c == '!' || c == '"' || c == '\'' || c == '*' || c == ')') {
            ++i;
        } else {
            break;
        }
    }
    std::string rest = text::trim(raw.substr(i));
    if (rest.empty()) return std::nullopt;
    return rest;
}

// --- CoT JSON helpers -------------------------------------------------------

// Scans for balanced {...} blocks (string/escape aware) and returns the first
// one that parses as a JSON object.
std::optional<json> first_json_object(const std::string& raw) {
    for (size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    json parsed = json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

std::string normalize_key(const std::string& key) {
    return text::collapse_whitespace(text::to_lower(key));
}

const json* find_key(const json& obj, std::initializer_list<const char*> aliases) {
    if (!obj.is_object()) return nullptr;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        std::string norm = normalize_key(it.key());
        for (const char* alias : aliases) {
            if (norm == alias) return &it.value();
        }
    }
    return nullptr;
}

std::vector<int> digits_in(const std::string& s) {
    std::vector<int> out;
    size_t i = 0;
    while (i < s.size()) {
        if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            // Runs too long for int cannot be sentence indices; dropping them
            // keeps the parser total on arbitrary model text.
            if (j - i <= 9) out.push_back(std::stoi(s.substr(i, j - i)));
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

// int / numeric string / list / "N/A" -> integer list ("N/A" -> empty).
std::vector<int> normalize_paragraph_refs(const json& value) {
    std::vector<int> out;
    if (value.is_number_integer() || value.is_number_unsigned()) {
        out.push_back(value.get<int>());
    } else if (value.is_number_float()) {
        out.push_back(static_cast<int>(value.get<double>()));
    } else if (value.is_string()) {
        for (int v : digits_in(value.get<std::string>())) out.push_back(v);
    } else if (value.is_array()) {
        for (const auto& item : value) {
            for (int v : normalize_paragraph_refs(item)) out.push_back(v);
        }
    }
    return out;
}

std::string string_or_dump(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_null()) return "";
    return value.dump();
}

ThoughtStep thought_from(const json& j) {
    ThoughtStep step;
    if (j.is_string()) {
        step.reasoning = j.get<std::string>();
        return step;
    }
    if (const json* r = find_key(j, {"reasoning", "reason"})) step.reasoning = string_or_dump(*r);
    if (const json* e = find_key(j, {"evidence"})) step.evidence = string_or_dump(*e);
    if (const json* p = find_key(j, {"relevant paragraphs", "relevant paragraph",
                                     "relevant_paragraphs"})) {
        step.relevant_paragraphs = normalize_paragraph_refs(*p);
    }
    return step;
}

std::optional<Answer> answer_from_json(const json& value) {
    if (value.is_boolean()) return value.get<bool>() ? Answer::yes : Answer::no;
    if (!value.is_string()) return std::nullopt;
    std::string s = text::to_lower(text::trim(value.get<std::string>()));
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '"')) s.pop_back();
    if (s == "yes") return Answer::yes;
    if (s == "no") return Answer::no;
    return std::nullopt;
}

// --- multi-label helpers ----------------------------------------------------

std::optional<json> first_json_array(const std::string& raw) {
    for (size_t start = raw.find('['); start != std::string::npos;
         start = raw.find('[', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[') {
                ++depth;
            } else if (c == ']') {
                if (--depth == 0) {
                    json parsed = json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_array()) return parsed;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

std::string strip_list_marker(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
        ++i;
    } else {
        size_t j = i;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) i = j + 1;
    }
    return line.substr(i);
}

// "Tropes: a, b" -> "a, b" when the label prefix is short and comma-free.
std::string strip_label_prefix(const std::string& line) {
    size_t colon = line.find(':');
    if (colon == std::string::npos) return line;
    std::string prefix = line.substr(0, colon);
    if (prefix.find(',') != std::string::npos) return line;
    if (text::count_words(prefix) > 3) return line;
    return line.substr(colon + 1);
}

std::vector<std::string> scan_line_candidates(const std::string& raw) {
    std::vector<std::string> out;
    for (const std::string& line : text::split(raw, '\n')) {
        std::string body = strip_label_prefix(strip_list_marker(line));
        for (const std::string& seg : text::split(body, ',')) {
            for (const std::string& piece : text::split(seg, ';')) {
                std::string candidate = text::trim(piece);
                if (!candidate.empty() && candidate.back() == '.') {
                    candidate = text::trim(candidate.substr(0, candidate.size() - 1));
                }
                if (!candidate.empty()) out.push_back(candidate);
            }
        }
    }
    return out;
}

}  // namespace

BinaryPrediction parse_binary(const std::string& raw) {
    BinaryPrediction pred;
    pred.raw = raw;

    auto hits = answer_tokens(raw);
    if (hits.empty()) {
        pred.status = ParseStatus::failed;
        return pred;
    }
    const size_t lead = leading_content_pos(raw);
    if (hits.front().pos <= lead) {
        pred.answer = hits.front().answer;
        pred.status = ParseStatus::clean;
        size_t len = hits.front().answer == Answer::yes ? 3 : 2;
        pred.explanation = explanation_after(raw, hits.front().pos + len);
        return pred;
    }
    bool all_agree = std::all_of(hits.begin(), hits.end(),
                                 [&](const TokenHit& h) { return h.answer == hits.front().answer; });
    if (!all_agree) {
        pred.status = ParseStatus::failed;
        return pred;
    }
    pred.answer = hits.front().answer;
    pred.status = ParseStatus::recovered;
    size_t len = hits.front().answer == Answer::yes ? 3 : 2;
    pred.explanation = explanation_after(raw, hits.front().pos + len);
    return pred;
}

CoTPrediction parse_cot_json(const std::string& raw) {
    CoTPrediction pred;
    pred.raw = raw;

    std::optional<json> obj = first_json_object(raw);
    if (!obj) {
        pred.status = ParseStatus::failed;
        return pred;
    }
    const json* answer = find_key(*obj, {"answer"});
    std::optional<Answer> parsed_answer = answer ? answer_from_json(*answer) : std::nullopt;
    if (!parsed_answer) {
        pred.status = ParseStatus::failed;
        return pred;
    }
    pred.answer = parsed_answer;

    if (const json* trope = find_key(*obj, {"trope"})) pred.trope = string_or_dump(*trope);
    if (const json* def = find_key(*obj, {"trope definition", "definition"})) {
        if (def->is_string()) pred.definition = def->get<std::string>();
    }
    if (const json* thought = find_key(*obj, {"thought", "thoughts"})) {
        if (thought->is_array()) {
            for (const auto& t : *thought) pred.thoughts.push_back(thought_from(t));
        } else if (thought->is_object() || thought->is_string()) {
            pred.thoughts.push_back(thought_from(*thought));
        }
    }
    pred.status = pred.thoughts.empty() ? ParseStatus::recovered : ParseStatus::clean;
    return pred;
}

std::string to_canonical_json(const CoTPrediction& prediction) {
    ordered_json j;
    j["Trope"] = prediction.trope;
    if (prediction.definition) j["Definition"] = *prediction.definition;
    ordered_json thoughts = ordered_json::array();
    for (const auto& t : prediction.thoughts) {
        ordered_json step;
        step["Reasoning"] = t.reasoning;
        step["Evidence"] = t.evidence;
        step["Relevant Paragraphs"] = t.relevant_paragraphs;
        thoughts.push_back(std::move(step));
    }
    j["Thought"] = std::move(thoughts);
    if (prediction.answer) j["Answer"] = to_string(*prediction.answer);
    return j.dump(4);
}

MultiLabelPrediction parse_multi_label(const std::string& raw, const TropeCatalog& catalog) {
    MultiLabelPrediction pred;
    pred.raw = raw;

    std::vector<std::string> candidates;
    bool from_json = false;
    if (std::optional<json> arr = first_json_array(raw)) {
        from_json = true;
        for (const auto& item : *arr) {
            if (item.is_string()) candidates.push_back(item.get<std::string>());
        }
    } else {
        candidates = scan_line_candidates(raw);
    }
    if (candidates.empty() && !from_json) {
        pred.status = ParseStatus::failed;
        return pred;
    }

    std::set<std::string> resolved;
    for (const auto& candidate : candidates) {
        if (auto canonical = canonicalize_trope(candidate, catalog)) {
            resolved.insert(*canonical);
        } else {
            pred.out_of_catalog.push_back(candidate);
        }
    }
    pred.tropes.assign(resolved.begin(), resolved.end());
    pred.status = (from_json && pred.out_of_catalog.empty()) ? ParseStatus::clean
                                                             : ParseStatus::recovered;
    return pred;
}

GroundingReport validate_grounding(const CoTPrediction& prediction, const Synopsis& synopsis) {
    GroundingReport report;
    const int n = static_cast<int>(synopsis.sentences.size());
    for (const auto& thought : prediction.thoughts) {
        for (int idx : thought.relevant_paragraphs) {
            ++report.total_refs;
            if (idx >= 0 && idx < n) {
                ++report.in_range;
            } else {
                report.out_of_range_indices.push_back(idx);
            }
        }
    }
    return report;
}

}  // namespace tropeval
