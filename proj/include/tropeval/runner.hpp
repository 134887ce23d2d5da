#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tropeval/client.hpp"
#include "tropeval/corpus.hpp"
#include "tropeval/metrics.hpp"
#include "tropeval/parsing.hpp"
#include "tropeval/prompting.hpp"
#include "tropeval/types.hpp"

namespace tropeval {

struct ProviderSpec {
    std::string kind = "scripted";  // scripted | random | http
    std::string fixture;            // scripted: rules file
    double yes_probability = 0.5;   // random
    std::uint64_t seed = 0;         // random
    ProviderConfig http;
};

struct SubsetSpec {
    std::optional<int> n_synopses;         // nullopt = all
    std::vector<std::string> trope_names;  // explicit; empty = use n_tropes
    std::optional<int> n_tropes;           // nullopt (with empty names) = all
    std::uint64_t trope_seed = 0;
};

struct ExperimentConfig {
    std::string model = "offline";
    ProviderSpec provider;
    QueryMode query_mode = QueryMode::trope_wise;
    PromptMode prompt_mode = PromptMode::base;
    bool with_definitions = false;
    std::string exemplar_id = "example1";
    SubsetSpec subset;
    std::uint64_t sample_seed = 0;  // synopsis subset sampling
    std::string template_version;   // empty = builtin version
    std::string corpus_path;
    std::string catalog_path;
    std::string templates_dir;  // empty = builtin templates
    int max_parallel = 4;
    int max_retries = 0;
};

ExperimentConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);
// Paths inside the file resolve relative to the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
// sha256 of the canonical config serialization; identifies the run.
std::string config_hash(const ExperimentConfig& config);

std::unique_ptr<Provider> make_provider(const ExperimentConfig& config);
TemplateSet load_templates(const ExperimentConfig& config);

struct QueryItem {
    int index = 0;
    std::string synopsis_id;
    std::optional<std::string> trope;  // absent in multi-label mode
    std::string prompt_fingerprint;
};

struct QueryPlan {
    std::vector<std::string> synopsis_ids;  // chosen subset, corpus order
    std::vector<std::string> tropes;        // chosen subset, catalog order
    std::vector<QueryItem> items;           // synopsis-major, trope-minor

    std::string fingerprint() const;
};

// Seeded, deterministic subset selection + stable plan ordering.
QueryPlan plan_queries(const ExperimentConfig& config, const Corpus& corpus,
                       const TemplateSet& templates);

// runs_dir/run-<config-hash prefix>; writes config.json + plan.json on first
// use, verifies the stored plan fingerprint on reuse.
std::filesystem::path init_run_dir(const std::filesystem::path& runs_dir,
                                   const ExperimentConfig& config, const QueryPlan& plan);

struct ExecuteOptions {
    std::optional<int> stop_after_items;  // test hook: stop once this many items are on disk
    Sleeper sleep;                        // empty = real sleeper
};

struct ExecuteStats {
    int skipped = 0;     // already present in the ledger
    int fetched = 0;     // dispatched this call (hits + misses)
    int cache_hits = 0;
    int errors = 0;      // items recorded as errors this call
};

// Appends one deterministic JSON line per item to items.jsonl, in plan order;
// already-recorded items are skipped, so re-executing a complete run performs
// zero provider calls. Timing goes to timings.jsonl, never into the ledger.
ExecuteStats execute(const std::filesystem::path& run_dir, const ExperimentConfig& config,
                     const QueryPlan& plan, const Corpus& corpus, Provider& provider,
                     ResponseCache& cache, const ExecuteOptions& options = {});

struct ItemResult {
    int index = 0;
    std::string synopsis_id;
    std::optional<std::string> trope;
    std::string request_fingerprint;
    std::optional<std::string> content;  // raw response, absent on error
    ParseStatus parse_status = ParseStatus::failed;
    std::optional<Answer> answer;              // trope-wise
    std::optional<CoTPrediction> cot;          // trope-wise CoT structure
    std::vector<std::string> predicted_tropes;  // multi-label
    std::vector<std::string> out_of_catalog;
    std::optional<std::string> error;
};

struct LoadedRun {
    std::filesystem::path dir;
    ExperimentConfig config;
    QueryPlan plan;
    std::vector<ItemResult> items;
    std::string status;  // pending | partial | complete
};

LoadedRun load_run(const std::filesystem::path& run_dir);

struct RunScore {
    ScoredRun scored;
    PRF micro;
    PRF macro;
    PerTropeReport per_trope;

    int planned = 0;
    int answered = 0;  // items with a response
    int errored = 0;   // items excluded from the universe
    int parse_clean = 0;
    int parse_recovered = 0;
    int parse_failed = 0;
    double parse_failure_rate = 0.0;  // failed / answered

    long long out_of_catalog_mentions = 0;
    long long out_of_scope_predictions = 0;  // in catalog but outside the planned trope subset
    GroundingReport grounding;               // pooled over CoT items

    bool partial = false;  // incomplete run or exclusions present
};

// Universe = planned pairs minus errored items' pairs; failed parses score as
// negative predictions.
RunScore score_run(const LoadedRun& run, const Corpus& corpus);

struct CompareReport {
    PRF micro_a;
    PRF micro_b;
    double delta_precision = 0.0;
    double delta_recall = 0.0;
    double delta_f1 = 0.0;
    std::vector<TropeGap> gaps;  // sorted by |gap| desc
};

CompareReport compare_runs(const RunScore& a, const RunScore& b);

}  // namespace tropeval
