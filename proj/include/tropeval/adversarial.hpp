#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tropeval/client.hpp"
#include "tropeval/corpus.hpp"
#include "tropeval/prompting.hpp"
#include "tropeval/types.hpp"

namespace tropeval {

struct InsufficientTargets : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The conceptual elements of a trope and the one the donor text must omit.
struct TropeComponentSpec {
    std::string trope;
    std::vector<std::string> components;
    std::string removed;

    void validate() const;  // |components| >= 2, removed in components
};

struct InjectionSpec {
    std::string target_id;
    std::string donor_text;
    int insert_at = 0;
    std::string trope;
};

struct AttackRecord {
    InjectionSpec spec;
    std::optional<Answer> pre_answer;
    Answer post_answer = Answer::no;
    bool misled = false;  // post_answer == yes on a gold-negative target
};

struct AttackError {
    std::string target_id;
    std::string stage;  // "build" | "pre" | "post"
    std::string message;
};

// Errored targets are excluded from rate denominators and reported separately.
struct AttackRunResult {
    std::vector<AttackRecord> records;
    std::vector<AttackError> errors;
};

struct AttackReport {
    std::string trope;
    PromptMode prompt_mode = PromptMode::base;
    int n_targets = 0;
    int n_misled = 0;
    double success_rate = 0.0;       // fraction in [0, 1]
    std::string success_rate_pct;    // two-decimal percentage, half-up
    int n_pre_no = 0;
    std::optional<double> flip_rate;  // among pre_answer == no targets
    std::optional<std::string> flip_rate_pct;
};

// Seeded uniform sample (no replacement) of gold-negative synopses.
std::vector<std::string> select_targets(const Corpus& corpus, const GroundTruth& truth,
                                        const std::string& trope, int n, std::uint64_t seed);

// Splices the segmented donor at insert_at; returns a new synopsis with id
// "<target id>+inj" and contiguously renumbered sentences.
Synopsis inject(const Synopsis& target, const std::string& donor_text, int insert_at);

struct AttackOptions {
    PromptMode prompt_mode = PromptMode::base;
    std::string model = "offline";
    bool query_pre = true;
    std::optional<int> insert_at;  // nullopt = per-target midpoint (n/2)
    int max_retries = 0;
    const TemplateSet* templates = nullptr;  // nullptr = builtin
    BuildOptions build;
    ResponseCache* cache = nullptr;
    Sleeper sleep;  // defaults to real_sleeper()
};

AttackRunResult run_attack(const Corpus& corpus, const std::vector<std::string>& target_ids,
                           const std::string& donor_text, const std::string& trope,
                           Provider& provider, const AttackOptions& options = {});

AttackReport compute_attack_report(const std::vector<AttackRecord>& records,
                                   PromptMode prompt_mode);

// Smallest integer count m in [0, n] whose percentage formats to pct, if any;
// lets reports assert that printed rates are consistent with integer counts.
std::optional<int> integer_count_for_rate(const std::string& pct, int n);

// On-disk attack description (donor text, component breakdown, sampling).
struct AttackSpec {
    TropeComponentSpec components;
    std::string donor_text;
    int n_targets = 0;
    std::uint64_t seed = 0;
    std::optional<int> insert_at;  // nullopt = midpoint
};

AttackSpec load_attack_spec(const std::filesystem::path& path);

}  // namespace tropeval
