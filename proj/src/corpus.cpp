#include "tropeval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "tropeval/text.hpp"

namespace tropeval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TropeCatalog

std::string TropeCatalog::normalize(const std::string& name) {
    std::string s = text::straighten_quotes(name);
    s = text::collapse_whitespace(s);
    s = text::strip_surrounding_quotes(s);
    return text::to_lower(s);
}

TropeCatalog::TropeCatalog(std::vector<TropeEntry> entries) : entries_(std::move(entries)) {
    for (size_t i = 0; i < entries_.size(); ++i) {
        std::string key = normalize(entries_[i].name);
        auto [it, inserted] = by_norm_.emplace(key, i);
        if (!inserted) {
            throw ValidationError("catalog: duplicate trope name after normalization: '" +
                                  entries_[i].name + "' collides with '" +
                                  entries_[it->second].name + "'");
        }
    }
}

bool TropeCatalog::contains(const std::string& canonical_name) const {
    auto it = by_norm_.find(normalize(canonical_name));
    return it != by_norm_.end() && entries_[it->second].name == canonical_name;
}

const TropeEntry* TropeCatalog::find(const std::string& name) const {
    auto it = by_norm_.find(normalize(name));
    return it == by_norm_.end() ? nullptr : &entries_[it->second];
}

std::vector<std::string> TropeCatalog::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

const std::set<std::string>& GroundTruth::for_synopsis(const std::string& id) const {
    static const std::set<std::string> empty;
    auto it = labels.find(id);
    return it == labels.end() ? empty : it->second;
}

bool GroundTruth::has(const std::string& id, const std::string& trope) const {
    auto it = labels.find(id);
    return it != labels.end() && it->second.count(trope) > 0;
}

const Synopsis* Corpus::find(const std::string& id) const {
    for (const auto& s : synopses) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace {

const std::unordered_set<std::string>& abbreviation_guards() {
    static const std::unordered_set<std::string> guards = {
        "mr",   "mrs",  "ms",   "dr",   "prof", "sr",   "jr",   "st",   "lt",  "col",
        "gen",  "sgt",  "capt", "cmdr", "maj",  "rev",  "hon",  "fr",   "vs",  "etc",
        "inc",  "ltd",  "co",   "corp", "mt",   "ft",   "dept", "est",  "fig", "vol",
        "approx", "ave", "blvd", "rd",  "jan",  "feb",  "mar",  "apr",  "jun", "jul",
        "aug",  "sep",  "sept", "oct",  "nov",  "dec"};
    return guards;
}

bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalpha(u) != 0 || c == '.' || c == '\'';
}

// "J", "e.g", "U.S", "Ph.D" style tokens read as abbreviations/initials.
bool looks_like_initialism(const std::string& token) {
    if (token.empty()) return false;
    size_t run = 0;
    bool saw_dot = false;
    for (char c : token) {
        if (c == '.') {
            if (run == 0 || run > 2) return false;
            run = 0;
            saw_dot = true;
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            ++run;
        } else {
            return false;
        }
    }
    if (run > 2) return false;
    return saw_dot || token.size() == 1;
}

bool guarded_abbreviation(const std::string& s, size_t dot_pos) {
    size_t begin = dot_pos;
    while (begin > 0 && is_word_char(s[begin - 1])) --begin;
    std::string token = s.substr(begin, dot_pos - begin);
    while (!token.empty() && token.back() == '.') token.pop_back();
    if (token.empty()) return false;
    if (looks_like_initialism(token)) return true;
    return abbreviation_guards().count(text::to_lower(token)) > 0;
}

// Consumes closing quotes/brackets after terminal punctuation, multibyte aware.
size_t skip_closers(const std::string& s, size_t i) {
    while (i < s.size()) {
        char c = s[i];
        if (c == '"' || c == '\'' || c == ')' || c == ']') {
            ++i;
            continue;
        }
        if (i + 2 < s.size() && static_cast<unsigned char>(c) == 0xE2 &&
            static_cast<unsigned char>(s[i + 1]) == 0x80) {
            unsigned char b = static_cast<unsigned char>(s[i + 2]);
            if (b == 0x99 || b == 0x9D) {  // ’ ”
                i += 3;
                continue;
            }
        }
        break;
    }
    return i;
}

bool opens_sentence(const std::string& s, size_t i) {
    if (i >= s.size()) return true;
    char c = s[i];
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isupper(u) || std::isdigit(u)) return true;
    if (c == '"' || c == '\'' || c == '(' || c == '[') return true;
    if (i + 2 < s.size() && u == 0xE2 && static_cast<unsigned char>(s[i + 1]) == 0x80) {
        unsigned char b = static_cast<unsigned char>(s[i + 2]);
        if (b == 0x98 || b == 0x9C) return true;  // ‘ “
    }
    return false;
}

bool is_blank_gap(const std::string& s, size_t from, size_t to) {
    int newlines = 0;
    for (size_t i = from; i < to; ++i) {
        if (s[i] == '\n') ++newlines;
    }
    return newlines >= 2;
}

}  // namespace

std::vector<Sentence> segment_sentences(const std::string& raw_text) {
    const std::string trimmed = text::trim(raw_text);
    if (trimmed.empty()) throw ValidationError("segment_sentences: empty text");

    std::vector<std::string> pieces;
    const std::string& s = trimmed;
    size_t start = 0;
    size_t i = 0;
    auto flush = [&](size_t end) {
        std::string piece = text::collapse_whitespace(s.substr(start, end - start));
        if (!piece.empty()) pieces.push_back(std::move(piece));
    };

    while (i < s.size()) {
        char c = s[i];
        if (c == '.' || c == '!' || c == '?') {
            size_t run_start = i;
            while (i < s.size() && (s[i] == '.' || s[i] == '!' || s[i] == '?')) ++i;
            bool single_dot = (i - run_start == 1) && s[run_start] == '.';
            if (single_dot) {
                bool decimal = run_start > 0 && i < s.size() &&
                               std::isdigit(static_cast<unsigned char>(s[run_start - 1])) &&
                               std::isdigit(static_cast<unsigned char>(s[i]));
                if (decimal || guarded_abbreviation(s, run_start)) continue;
            }
            size_t after = skip_closers(s, i);
            if (after >= s.size()) {
                flush(after);
                start = after;
                i = after;
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(s[after]))) {
                size_t next = after;
                while (next < s.size() && std::isspace(static_cast<unsigned char>(s[next]))) ++next;
                if (opens_sentence(s, next)) {
                    flush(after);
                    start = next;
                    i = next;
                    continue;
                }
            }
            i = after;
        } else if (c == '\n') {
            // blank line forces a boundary even without terminal punctuation
            size_t next = i;
            while (next < s.size() && std::isspace(static_cast<unsigned char>(s[next]))) ++next;
            if (is_blank_gap(s, i, next) && next < s.size()) {
                flush(i);
                start = next;
                i = next;
            } else {
                ++i;
            }
        } else {
            ++i;
        }
    }
    if (start < s.size()) flush(s.size());

    std::vector<Sentence> out;
    out.reserve(pieces.size());
    for (size_t k = 0; k < pieces.size(); ++k) {
        out.push_back(Sentence{static_cast<int>(k), std::move(pieces[k])});
    }
    if (out.empty()) throw ValidationError("segment_sentences: no sentences found");
    return out;
}

// ---------------------------------------------------------------------------
// Loading / saving

namespace {

TropeEntry parse_trope_entry(const json& j, size_t pos) {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) {
        throw ValidationError("catalog entry " + std::to_string(pos) +
                              ": expected object with string 'name'");
    }
    TropeEntry e;
    e.name = j["name"].get<std::string>();
    if (text::trim(e.name).empty()) {
        throw ValidationError("catalog entry " + std::to_string(pos) + ": empty name");
    }
    if (j.contains("definition") && !j["definition"].is_null()) {
        e.definition = j["definition"].get<std::string>();
    }
    if (j.contains("components") && !j["components"].is_null()) {
        const json& c = j["components"];
        TropeComponents tc;
        for (const auto& p : c.at("parts")) tc.parts.push_back(p.get<std::string>());
        tc.removable = c.at("removable").get<std::string>();
        if (tc.parts.size() < 2) {
            throw ValidationError("catalog entry '" + e.name + "': components need >= 2 parts");
        }
        if (std::find(tc.parts.begin(), tc.parts.end(), tc.removable) == tc.parts.end()) {
            throw ValidationError("catalog entry '" + e.name +
                                  "': removable component not listed in parts");
        }
        e.components = std::move(tc);
    }
    return e;
}

QuantityStats summarize(std::vector<double> values) {
    QuantityStats q;
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    q.min = values.front();
    q.max = values.back();
    q.median = (n % 2 == 1) ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    double sum = std::accumulate(values.begin(), values.end(), 0.0);
    q.mean = sum / static_cast<double>(n);
    double var = 0;
    for (double v : values) var += (v - q.mean) * (v - q.mean);
    q.stddev = std::sqrt(var / static_cast<double>(n));
    return q;
}

}  // namespace

TropeCatalog load_catalog(const std::string& catalog_path) {
    std::ifstream in(catalog_path);
    if (!in) throw ValidationError("cannot open catalog file: " + catalog_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("catalog " + catalog_path + ": " + e.what());
    }
    if (!j.is_array() || j.empty()) {
        throw ValidationError("catalog " + catalog_path + ": expected non-empty JSON array");
    }
    std::vector<TropeEntry> entries;
    entries.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) entries.push_back(parse_trope_entry(j[i], i));
    return TropeCatalog(std::move(entries));
}

Corpus load_corpus(const std::string& corpus_path, const std::string& catalog_path) {
    Corpus corpus;
    corpus.catalog = load_catalog(catalog_path);

    std::ifstream in(corpus_path);
    if (!in) throw ValidationError("cannot open corpus file: " + corpus_path);

    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("corpus line " + std::to_string(line_no) +
                                  ": invalid JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
            !j["text"].is_string()) {
            throw ValidationError("corpus line " + std::to_string(line_no) +
                                  ": record needs string fields 'id' and 'text'");
        }
        Synopsis syn;
        syn.id = j["id"].get<std::string>();
        if (syn.id.empty()) {
            throw ValidationError("corpus line " + std::to_string(line_no) + ": empty id");
        }
        if (!seen_ids.insert(syn.id).second) {
            throw ValidationError("corpus line " + std::to_string(line_no) +
                                  ": duplicate synopsis id '" + syn.id + "'");
        }
        if (j.contains("title") && !j["title"].is_null()) {
            syn.title = j["title"].get<std::string>();
        }
        syn.text = j["text"].get<std::string>();
        if (text::trim(syn.text).empty()) {
            throw ValidationError("corpus line " + std::to_string(line_no) + ": empty text for '" +
                                  syn.id + "'");
        }
        syn.sentences = segment_sentences(syn.text);

        // A present-but-empty "tropes" array means "annotated, no tropes";
        // a missing key means the record carries no ground truth at all.
        if (j.contains("tropes")) {
            std::set<std::string> tropes;
            for (const auto& t : j["tropes"]) {
                std::string raw = t.get<std::string>();
                const TropeEntry* entry = corpus.catalog.find(raw);
                if (!entry) {
                    throw ValidationError("corpus line " + std::to_string(line_no) + ": label '" +
                                          raw + "' on synopsis '" + syn.id +
                                          "' is not in the catalog");
                }
                tropes.insert(entry->name);
            }
            corpus.truth.labels[syn.id] = std::move(tropes);
        }
        corpus.synopses.push_back(std::move(syn));
    }
    if (corpus.synopses.empty()) throw ValidationError("corpus " + corpus_path + ": no records");
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& corpus_path,
                 const std::string& catalog_path) {
    {
        std::ofstream out(corpus_path);
        if (!out) throw ValidationError("cannot write corpus file: " + corpus_path);
        for (const auto& syn : corpus.synopses) {
            json j;
            j["id"] = syn.id;
            if (syn.title) j["title"] = *syn.title;
            j["text"] = syn.text;
            json tropes = json::array();
            for (const auto& t : corpus.truth.for_synopsis(syn.id)) tropes.push_back(t);
            j["tropes"] = std::move(tropes);
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(catalog_path);
        if (!out) throw ValidationError("cannot write catalog file: " + catalog_path);
        json arr = json::array();
        for (const auto& e : corpus.catalog.entries()) {
            json j;
            j["name"] = e.name;
            if (e.definition) j["definition"] = *e.definition;
            if (e.components) {
                j["components"] = {{"parts", e.components->parts},
                                   {"removable", e.components->removable}};
            }
            arr.push_back(std::move(j));
        }
        out << arr.dump(2) << "\n";
    }
}

DatasetStats compute_stats(const Corpus& corpus) {
    if (corpus.synopses.empty()) throw ValidationError("compute_stats: empty corpus");
    std::vector<double> words, sentences, tropes;
    words.reserve(corpus.synopses.size());
    for (const auto& syn : corpus.synopses) {
        words.push_back(static_cast<double>(text::count_words(syn.text)));
        sentences.push_back(static_cast<double>(syn.sentences.size()));
        tropes.push_back(static_cast<double>(corpus.truth.for_synopsis(syn.id).size()));
    }
    std::vector<double> occurrences;
    occurrences.reserve(corpus.catalog.size());
    for (const auto& entry : corpus.catalog.entries()) {
        double count = 0;
        for (const auto& [id, labels] : corpus.truth.labels) {
            if (labels.count(entry.name)) ++count;
        }
        occurrences.push_back(count);
    }
    DatasetStats stats;
    stats.words_per_plot = summarize(std::move(words));
    stats.sentences_per_plot = summarize(std::move(sentences));
    stats.tropes_per_plot = summarize(std::move(tropes));
    stats.occurrences_per_trope = summarize(std::move(occurrences));
    return stats;
}

std::optional<std::string> canonicalize_trope(const std::string& raw, const TropeCatalog& catalog,
                                              size_t max_distance) {
    if (catalog.empty()) throw std::invalid_argument("canonicalize_trope: empty catalog");
    const std::string key = TropeCatalog::normalize(raw);
    if (key.empty()) return std::nullopt;
    if (const TropeEntry* hit = catalog.find(raw)) return hit->name;

    size_t best = std::numeric_limits<size_t>::max();
    const std::string* best_name = nullptr;
    for (const auto& entry : catalog.entries()) {
        size_t d = text::edit_distance(key, TropeCatalog::normalize(entry.name));
        if (d < best || (d == best && best_name && entry.name < *best_name)) {
            best = d;
            best_name = &entry.name;
        }
    }
    if (best_name && best <= max_distance) return *best_name;
    return std::nullopt;
}

}  // namespace tropeval
