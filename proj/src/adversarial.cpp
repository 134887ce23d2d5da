#include "tropeval/adversarial.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "tropeval/parsing.hpp"
#include "tropeval/rng.hpp"
#include "tropeval/text.hpp"

namespace tropeval {

using nlohmann::json;

void TropeComponentSpec::validate() const {
    if (trope.empty()) throw ValidationError("component spec needs a trope name");
    if (components.size() < 2) {
        throw ValidationError("component spec for " + trope + " needs at least 2 components");
    }
    if (std::find(components.begin(), components.end(), removed) == components.end()) {
        throw ValidationError("removed component \"" + removed + "\" is not listed for " + trope);
    }
}

std::vector<std::string> select_targets(const Corpus& corpus, const GroundTruth& truth,
                                        const std::string& trope, int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("n must be non-negative");
    std::vector<std::string> negatives;
    for (const auto& synopsis : corpus.synopses) {
        if (!truth.has(synopsis.id, trope)) negatives.push_back(synopsis.id);
    }
    if (static_cast<int>(negatives.size()) < n) {
        throw InsufficientTargets("only " + std::to_string(negatives.size()) +
                                  " gold-negative synopses for " + trope + "; need " +
                                  std::to_string(n));
    }
    DeterministicRng rng(seed);
    std::vector<std::string> picked;
    for (std::size_t idx : rng.sample_indices(negatives.size(), static_cast<std::size_t>(n))) {
        picked.push_back(negatives[idx]);
    }
    return picked;
}

Synopsis inject(const Synopsis& target, const std::string& donor_text, int insert_at) {
    const int n = static_cast<int>(target.sentences.size());
    if (insert_at < 0 || insert_at > n) {
        throw std::out_of_range("insert_at " + std::to_string(insert_at) +
                                " outside [0, " + std::to_string(n) + "]");
    }
    std::vector<Sentence> donor = segment_sentences(donor_text);

    Synopsis attacked;
    attacked.id = target.id + "+inj";
    attacked.title = target.title;
    std::vector<Sentence> merged;
    merged.reserve(target.sentences.size() + donor.size());
    for (int i = 0; i < insert_at; ++i) merged.push_back(target.sentences[i]);
    for (const auto& s : donor) merged.push_back(s);
    for (int i = insert_at; i < n; ++i) merged.push_back(target.sentences[i]);
    for (int i = 0; i < static_cast<int>(merged.size()); ++i) merged[i].index = i;
    attacked.sentences = std::move(merged);

    std::string text;
    for (const auto& s : attacked.sentences) {
        if (!text.empty()) text += " ";
        text += s.text;
    }
    attacked.text = std::move(text);
    return attacked;
}

namespace {

// One trope-wise query; returns nullopt (with message) on completion or parse
// failure so the caller can record and exclude the target.
std::optional<Answer> query_answer(const Synopsis& synopsis, const std::string& trope,
                                   Provider& provider, const AttackOptions& options,
                                   const TemplateSet& templates, std::string& error_out) {
    try {
        PromptSpec prompt =
            options.prompt_mode == PromptMode::cot
                ? build_trope_wise_cot(synopsis, trope, templates.exemplar("example1"), templates,
                                       options.build)
                : build_trope_wise_base(synopsis, trope, templates, options.build);
        ChatRequest request = make_request(prompt, options.model);
        Sleeper sleep = options.sleep ? options.sleep : real_sleeper();
        ChatResponse response =
            options.cache
                ? cached_complete(request, provider, *options.cache, options.max_retries, sleep)
                      .response
                : complete(request, provider, options.max_retries, sleep);

        std::optional<Answer> answer;
        if (options.prompt_mode == PromptMode::cot) {
            CoTPrediction pred = parse_cot_json(response.content);
            answer = pred.answer;
        } else {
            BinaryPrediction pred = parse_binary(response.content);
            answer = pred.answer;
        }
        if (!answer) {
            error_out = "unparseable answer: " + response.content.substr(0, 120);
            return std::nullopt;
        }
        return answer;
    } catch (const std::exception& e) {
        error_out = e.what();
        return std::nullopt;
    }
}

}  // namespace

AttackRunResult run_attack(const Corpus& corpus, const std::vector<std::string>& target_ids,
                           const std::string& donor_text, const std::string& trope,
                           Provider& provider, const AttackOptions& options) {
    const TemplateSet builtin_templates = TemplateSet::builtin();
    const TemplateSet& templates = options.templates ? *options.templates : builtin_templates;

    AttackRunResult result;
    for (const auto& target_id : target_ids) {
        const Synopsis* target = corpus.find(target_id);
        if (!target) {
            result.errors.push_back({target_id, "build", "unknown synopsis id"});
            continue;
        }
        int insert_at = options.insert_at
                            ? *options.insert_at
                            : static_cast<int>(target->sentences.size()) / 2;
        Synopsis attacked;
        try {
            attacked = inject(*target, donor_text, insert_at);
        } catch (const std::exception& e) {
            result.errors.push_back({target_id, "build", e.what()});
            continue;
        }

        AttackRecord record;
        record.spec = {target_id, donor_text, insert_at, trope};

        std::string error;
        if (options.query_pre) {
            std::optional<Answer> pre =
                query_answer(*target, trope, provider, options, templates, error);
            if (!pre) {
                result.errors.push_back({target_id, "pre", error});
                continue;
            }
            record.pre_answer = pre;
        }
        std::optional<Answer> post =
            query_answer(attacked, trope, provider, options, templates, error);
        if (!post) {
            result.errors.push_back({target_id, "post", error});
            continue;
        }
        record.post_answer = *post;
        record.misled = *post == Answer::yes;
        result.records.push_back(std::move(record));
    }
    return result;
}

AttackReport compute_attack_report(const std::vector<AttackRecord>& records,
                                   PromptMode prompt_mode) {
    if (records.empty()) throw ValidationError("no attack records to report");
    AttackReport report;
    report.trope = records.front().spec.trope;
    report.prompt_mode = prompt_mode;
    report.n_targets = static_cast<int>(records.size());
    int flips = 0;
    for (const auto& record : records) {
        if (record.misled) ++report.n_misled;
        if (record.pre_answer && *record.pre_answer == Answer::no) {
            ++report.n_pre_no;
            if (record.post_answer == Answer::yes) ++flips;
        }
    }
    report.success_rate = static_cast<double>(report.n_misled) / report.n_targets;
    report.success_rate_pct = text::format_percent(report.success_rate);
    if (report.n_pre_no > 0) {
        report.flip_rate = static_cast<double>(flips) / report.n_pre_no;
        report.flip_rate_pct = text::format_percent(*report.flip_rate);
    }
    return report;
}

std::optional<int> integer_count_for_rate(const std::string& pct, int n) {
    if (n <= 0) return std::nullopt;
    for (int m = 0; m <= n; ++m) {
        if (text::format_percent(static_cast<double>(m) / n) == pct) return m;
    }
    return std::nullopt;
}

AttackSpec load_attack_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open attack spec: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ValidationError("attack spec is not a JSON object: " + path.string());
    }
    AttackSpec spec;
    try {
        spec.components.trope = j.at("trope").get<std::string>();
        for (const auto& c : j.at("components")) {
            spec.components.components.push_back(c.get<std::string>());
        }
        spec.components.removed = j.at("removed").get<std::string>();
        spec.donor_text = j.at("donor_text").get<std::string>();
        spec.n_targets = j.at("n_targets").get<int>();
        spec.seed = j.value("seed", 0ULL);
        if (j.contains("insert_at") && !j["insert_at"].is_null()) {
            if (j["insert_at"].is_string()) {
                if (j["insert_at"].get<std::string>() != "midpoint") {
                    throw ValidationError("insert_at must be \"midpoint\" or an integer");
                }
            } else {
                spec.insert_at = j["insert_at"].get<int>();
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError("attack spec " + path.string() + ": " + e.what());
    }
    spec.components.validate();
    if (spec.n_targets <= 0) throw ValidationError("n_targets must be positive");
    if (spec.donor_text.empty()) throw ValidationError("donor_text must be non-empty");
    return spec;
}

}  // namespace tropeval
