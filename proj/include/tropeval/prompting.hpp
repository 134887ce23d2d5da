#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tropeval/corpus.hpp"
#include "tropeval/types.hpp"

namespace tropeval {

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A worked chain-of-thought example embedded into CoT prompts.
struct Exemplar {
    std::string id;
    std::vector<std::string> plot_sentences;  // already segmented, index = position
    std::string query_trope;
    std::string answer_json;  // must parse under the CoT output schema

    std::string render() const;
};

struct Decoding {
    double temperature = 0.0;
    std::optional<int> max_output_tokens;

    bool operator==(const Decoding&) const = default;
};

// A fully rendered, provider-independent chat request.
struct PromptSpec {
    std::vector<ChatMessage> messages;
    Decoding decoding;
    std::string template_version;
    size_t estimated_tokens = 0;
    std::string fingerprint;  // stable hash of all content fields

    const std::string& user_content() const;  // content of the last user message
    std::string joined_content() const;       // all message contents concatenated
};

struct BuildOptions {
    // Single user message by default, matching the reference transcripts; the
    // flag moves the instruction block into a system message for ablation.
    bool system_instruction = false;
    // 4 chars/token estimate with a 10% margin; oversized prompts are rejected,
    // never truncated.
    size_t max_prompt_tokens = 128000;
    std::optional<int> max_output_tokens;
};

// The four prompt families plus exemplars, pinned under a version id.
class TemplateSet {
public:
    static TemplateSet builtin();
    // Reads trope_wise_base.txt, trope_wise_cot.txt, multi_label_base.txt,
    // multi_label_with_definitions.txt, VERSION, exemplars/*.json from a directory.
    static TemplateSet load_dir(const std::string& dir);

    const std::string& version() const { return version_; }
    const std::string& trope_wise_base() const { return trope_wise_base_; }
    const std::string& trope_wise_cot() const { return trope_wise_cot_; }
    const std::string& multi_label_base() const { return multi_label_base_; }
    const std::string& multi_label_with_definitions() const { return multi_label_defs_; }

    const Exemplar& exemplar(const std::string& id) const;
    std::vector<std::string> exemplar_ids() const;

    bool operator==(const TemplateSet&) const = default;

    std::string version_;
    std::string trope_wise_base_;
    std::string trope_wise_cot_;
    std::string multi_label_base_;
    std::string multi_label_defs_;
    std::map<std::string, Exemplar> exemplars_;
};

inline bool operator==(const Exemplar& a, const Exemplar& b) {
    return a.id == b.id && a.plot_sentences == b.plot_sentences &&
           a.query_trope == b.query_trope && a.answer_json == b.answer_json;
}

// "<index>, <sentence>" per line.
std::string render_numbered(const Synopsis& synopsis);

PromptSpec build_trope_wise_base(const Synopsis& synopsis, const std::string& trope,
                                 const TemplateSet& templates = TemplateSet::builtin(),
                                 const BuildOptions& options = {});

PromptSpec build_trope_wise_cot(const Synopsis& synopsis, const std::string& trope,
                                const Exemplar& exemplar,
                                const TemplateSet& templates = TemplateSet::builtin(),
                                const BuildOptions& options = {});

PromptSpec build_multi_label(const Synopsis& synopsis, const TropeCatalog& catalog,
                             PromptMode prompt_mode, bool with_definitions,
                             const TemplateSet& templates = TemplateSet::builtin(),
                             const BuildOptions& options = {},
                             const std::string& exemplar_id = "example1");

}  // namespace tropeval
