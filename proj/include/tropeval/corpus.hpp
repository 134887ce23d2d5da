#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tropeval/types.hpp"

namespace tropeval {

// Identifies the rule set used by segment_sentences; recorded per run so stored
// sentence indices stay interpretable if the splitter ever changes.
inline constexpr const char* kSplitterId = "rulebased.v1";

struct Sentence {
    int index = 0;
    std::string text;

    bool operator==(const Sentence&) const = default;
};

struct Synopsis {
    std::string id;
    std::optional<std::string> title;
    std::string text;
    std::vector<Sentence> sentences;  // contiguous indices 0..n-1

    bool operator==(const Synopsis&) const = default;
};

struct TropeComponents {
    std::vector<std::string> parts;
    std::string removable;

    bool operator==(const TropeComponents&) const = default;
};

struct TropeEntry {
    std::string name;
    std::optional<std::string> definition;
    std::optional<TropeComponents> components;

    bool operator==(const TropeEntry&) const = default;
};

class TropeCatalog {
public:
    TropeCatalog() = default;
    explicit TropeCatalog(std::vector<TropeEntry> entries);

    // Case-folded, whitespace-collapsed, quote-normalized key used for lookups.
    static std::string normalize(const std::string& name);

    const std::vector<TropeEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    bool contains(const std::string& canonical_name) const;
    const TropeEntry* find(const std::string& name) const;  // by normalized name
    std::vector<std::string> names() const;

    bool operator==(const TropeCatalog& other) const { return entries_ == other.entries_; }

private:
    std::vector<TropeEntry> entries_;
    std::unordered_map<std::string, size_t> by_norm_;
};

struct GroundTruth {
    // synopsis id -> set of canonical trope names
    std::map<std::string, std::set<std::string>> labels;

    const std::set<std::string>& for_synopsis(const std::string& id) const;
    bool has(const std::string& id, const std::string& trope) const;

    bool operator==(const GroundTruth&) const = default;
};

struct QuantityStats {
    double median = 0;
    double mean = 0;
    double min = 0;
    double max = 0;
    double stddev = 0;  // population
};

struct DatasetStats {
    QuantityStats words_per_plot;
    QuantityStats sentences_per_plot;
    QuantityStats tropes_per_plot;
    QuantityStats occurrences_per_trope;
};

struct Corpus {
    std::vector<Synopsis> synopses;
    TropeCatalog catalog;
    GroundTruth truth;

    const Synopsis* find(const std::string& id) const;
};

// Rule-based splitter: terminal punctuation with an abbreviation guard list,
// trailing closing quotes attached to the sentence they end.
std::vector<Sentence> segment_sentences(const std::string& raw_text);

TropeCatalog load_catalog(const std::string& catalog_path);

// corpus_path: one JSON synopsis record per line; catalog_path: JSON array.
// Rejects duplicate ids, labels naming tropes outside the catalog, and empty
// corpora. Malformed records are reported with their line number.
Corpus load_corpus(const std::string& corpus_path, const std::string& catalog_path);

void save_corpus(const Corpus& corpus, const std::string& corpus_path,
                 const std::string& catalog_path);

DatasetStats compute_stats(const Corpus& corpus);

inline constexpr size_t kDefaultFuzzyThreshold = 2;

// Exact normalized match first, then nearest catalog name within the edit
// distance threshold (ties broken by lexicographically smallest canonical
// name). nullopt means the mention stays out-of-catalog; never fatal.
std::optional<std::string> canonicalize_trope(const std::string& raw, const TropeCatalog& catalog,
                                              size_t max_distance = kDefaultFuzzyThreshold);

}  // namespace tropeval
