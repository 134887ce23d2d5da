#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tropeval/corpus.hpp"
#include "tropeval/types.hpp"

namespace tropeval {

// Parsers are total and conservative: they never throw on model text and never
// emit an answer, trope name, or index that is not derived from the raw input.
// Worst case is parse_status = failed with raw preserved.

struct BinaryPrediction {
    std::optional<Answer> answer;  // present iff status != failed
    std::optional<std::string> explanation;
    std::string raw;
    ParseStatus status = ParseStatus::failed;
};

struct ThoughtStep {
    std::string reasoning;
    std::string evidence;
    std::vector<int> relevant_paragraphs;

    bool operator==(const ThoughtStep&) const = default;
};

struct CoTPrediction {
    std::string trope;
    std::optional<std::string> definition;
    std::vector<ThoughtStep> thoughts;  // empty only when status == recovered
    std::optional<Answer> answer;
    std::string raw;
    ParseStatus status = ParseStatus::failed;
};

struct MultiLabelPrediction {
    std::vector<std::string> tropes;          // canonical, deduplicated, catalog subset
    std::vector<std::string> out_of_catalog;  // every unresolvable mention, in order
    std::string raw;
    ParseStatus status = ParseStatus::failed;
};

struct GroundingReport {
    int total_refs = 0;
    int in_range = 0;
    std::vector<int> out_of_range_indices;
};

// First standalone yes/no token wins when it leads the reply; otherwise all
// mentions must agree. Contradictory mentions with no leading token -> failed.
BinaryPrediction parse_binary(const std::string& raw);

// Extracts the first balanced {...} block that parses as JSON. Key matching is
// case-insensitive and alias-tolerant ("Trope Definition" == "Definition";
// Thought object or list; Relevant Paragraphs int / numeric string / list /
// "N/A"). Answer is required.
CoTPrediction parse_cot_json(const std::string& raw);

// Canonical re-serialization of a clean prediction; parse_cot_json on the
// result reproduces the prediction.
std::string to_canonical_json(const CoTPrediction& prediction);

// JSON string array if present, otherwise a line/comma scan; each candidate is
// canonicalized against the catalog, unresolved mentions go to out_of_catalog.
MultiLabelPrediction parse_multi_label(const std::string& raw, const TropeCatalog& catalog);

// Counts cited sentence indices inside [0, n); out-of-range citations are kept
// and listed, they are evidence themselves.
GroundingReport validate_grounding(const CoTPrediction& prediction, const Synopsis& synopsis);

}  // namespace tropeval
