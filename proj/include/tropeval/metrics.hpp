#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tropeval/corpus.hpp"
#include "tropeval/parsing.hpp"
#include "tropeval/types.hpp"

namespace tropeval {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;

    long long total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& other);
    bool operator==(const ConfusionCounts&) const = default;
};

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// A scored run: binary decisions over the `universe` cells, which may be a
// strict subset of synopsis_ids x tropes when some queries errored out.
struct ScoredRun {
    std::vector<std::string> synopsis_ids;
    std::vector<std::string> tropes;
    std::set<Pair> universe;
    std::set<Pair> gold;
    std::set<Pair> predicted;
    std::map<std::string, int> synopsis_chars;  // synopsis_id -> character length

    // Universe = full synopsis x trope product.
    static ScoredRun full_product(std::vector<std::string> synopsis_ids,
                                  std::vector<std::string> tropes, std::set<Pair> gold,
                                  std::set<Pair> predicted);
};

ConfusionCounts confusion(const std::set<Pair>& gold, const std::set<Pair>& predicted,
                          const std::set<Pair>& universe);

// Zero-denominator convention: P, R, F1 default to 0.
PRF prf(const ConfusionCounts& counts);

PRF micro_prf(const ScoredRun& run);

struct TropeScore {
    ConfusionCounts counts;
    PRF prf;
    long long support = 0;  // gold positives within the scored subset
    double yes_rate = 0.0;  // predicted positives / scored queries
};

struct PerTropeReport {
    std::map<std::string, TropeScore> by_trope;
};

PerTropeReport per_trope_prf(const ScoredRun& run);

// Unweighted component-wise mean over tropes.
PRF macro_average(const PerTropeReport& report);

struct RankedTropes {
    std::vector<std::pair<std::string, double>> easiest;  // top-k by F1, desc
    std::vector<std::pair<std::string, double>> hardest;  // bottom-k by F1, asc
};

// Ties broken by canonical name; requires k <= |tropes|.
RankedTropes rank_tropes(const PerTropeReport& report, int k);

struct YesRateTable {
    std::vector<std::string> tropes;            // sorted; shared across runs
    std::vector<std::vector<double>> per_run;   // aligned with `tropes`
};

YesRateTable yes_rate_distribution(const std::vector<ScoredRun>& runs);

struct LengthBin {
    int lo = 0;  // inclusive character bound
    int hi = 0;  // exclusive
    long long total = 0;
    long long correct = 0;
    double accuracy = 0.0;
};

struct LengthBinReport {
    int bin_width = 0;
    std::vector<LengthBin> bins;  // non-empty bins, ascending
};

LengthBinReport length_accuracy(const ScoredRun& run, int bin_width);

struct AuditCase {
    std::string synopsis_id;
    std::string trope;
    std::string raw;
    std::vector<ThoughtStep> thoughts;
    std::vector<std::pair<int, std::string>> cited_sentences;  // index -> verbatim text
    std::string verdict;  // left empty for the human reviewer
};

struct AuditSheet {
    std::uint64_t seed = 0;
    std::vector<AuditCase> cases;
};

// Seeded sample (without replacement) of n true positives that carry CoT
// structure; cited paragraph indices resolve to sentence text.
AuditSheet sample_audit(const ScoredRun& run, const std::map<Pair, CoTPrediction>& cot,
                        const Corpus& corpus, int n, std::uint64_t seed);

struct TropeGap {
    std::string trope;
    double f1_a = 0.0;
    double f1_b = 0.0;
    double gap = 0.0;  // f1_a - f1_b
};

// Sorted by |gap| descending, ties by trope name.
std::vector<TropeGap> diff_runs(const ScoredRun& run_a, const ScoredRun& run_b);

}  // namespace tropeval
