#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tropeval/adversarial.hpp"
#include "tropeval/client.hpp"
#include "tropeval/corpus.hpp"
#include "tropeval/metrics.hpp"
#include "tropeval/runner.hpp"
#include "tropeval/text.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace tropeval;

namespace {

std::string version_string() {
    return std::string("tropeval 0.1.0 (templates ") + TemplateSet::builtin().version() +
           ", splitter " + kSplitterId + ")";
}

void emit(const ordered_json& doc, bool json_out) {
    if (json_out) {
        std::cout << doc.dump(2) << "\n";
    }
}

ordered_json quantity_to_json(const QuantityStats& q) {
    return {{"median", q.median}, {"mean", q.mean},   {"min", q.min},
            {"max", q.max},       {"stddev", q.stddev}};
}

void print_quantity(const std::string& label, const QuantityStats& q) {
    std::cout << "  " << label << ": median " << q.median << ", mean " << q.mean << ", min "
              << q.min << ", max " << q.max << ", stddev " << q.stddev << "\n";
}

ordered_json prf_to_json(const PRF& p) {
    return {{"precision", p.precision},
            {"recall", p.recall},
            {"f1", p.f1},
            {"precision_pct", text::format_percent(p.precision)},
            {"recall_pct", text::format_percent(p.recall)},
            {"f1_pct", text::format_percent(p.f1)}};
}

ordered_json score_to_json(const RunScore& score, const fs::path& run_dir,
                           const ExperimentConfig& config) {
    ordered_json doc;
    doc["run_dir"] = run_dir.string();
    doc["model"] = config.model;
    doc["query_mode"] = to_string(config.query_mode);
    doc["prompt_mode"] = to_string(config.prompt_mode);
    doc["planned"] = score.planned;
    doc["answered"] = score.answered;
    doc["errored"] = score.errored;
    doc["partial"] = score.partial;
    doc["parse"] = {{"clean", score.parse_clean},
                    {"recovered", score.parse_recovered},
                    {"failed", score.parse_failed},
                    {"failure_rate", score.parse_failure_rate}};
    doc["micro"] = prf_to_json(score.micro);
    doc["macro"] = prf_to_json(score.macro);
    ordered_json per_trope = ordered_json::array();
    for (const auto& [trope, ts] : score.per_trope.by_trope) {
        per_trope.push_back({{"trope", trope},
                             {"tp", ts.counts.tp},
                             {"fp", ts.counts.fp},
                             {"fn", ts.counts.fn},
                             {"tn", ts.counts.tn},
                             {"precision", ts.prf.precision},
                             {"recall", ts.prf.recall},
                             {"f1", ts.prf.f1},
                             {"support", ts.support},
                             {"yes_rate", ts.yes_rate}});
    }
    doc["per_trope"] = std::move(per_trope);
    if (config.query_mode == QueryMode::multi_label) {
        doc["out_of_catalog_mentions"] = score.out_of_catalog_mentions;
        doc["out_of_scope_predictions"] = score.out_of_scope_predictions;
    }
    if (score.grounding.total_refs > 0) {
        doc["grounding"] = {
            {"total_refs", score.grounding.total_refs},
            {"in_range", score.grounding.in_range},
            {"out_of_range", score.grounding.out_of_range_indices.size()},
            {"in_range_rate", static_cast<double>(score.grounding.in_range) /
                                  static_cast<double>(score.grounding.total_refs)}};
    }
    return doc;
}

std::string score_to_csv(const RunScore& score) {
    std::string csv = "trope,tp,fp,fn,tn,precision_pct,recall_pct,f1_pct,support,yes_rate\n";
    for (const auto& [trope, ts] : score.per_trope.by_trope) {
        std::string name = trope;
        // RFC-4180 quoting for names with commas or quotes.
        if (name.find_first_of(",\"") != std::string::npos) {
            std::string quoted = "\"";
            for (char c : name) {
                if (c == '"') quoted += '"';
                quoted += c;
            }
            quoted += '"';
            name = quoted;
        }
        csv += name + "," + std::to_string(ts.counts.tp) + "," + std::to_string(ts.counts.fp) +
               "," + std::to_string(ts.counts.fn) + "," + std::to_string(ts.counts.tn) + "," +
               text::format_percent(ts.prf.precision) + "," +
               text::format_percent(ts.prf.recall) + "," + text::format_percent(ts.prf.f1) + "," +
               std::to_string(ts.support) + "," + text::format_percent(ts.yes_rate) + "\n";
    }
    return csv;
}

void print_score_summary(const RunScore& score, const fs::path& run_dir) {
    std::cout << "run: " << run_dir.string() << "\n"
              << "items: " << score.answered << "/" << score.planned << " answered, "
              << score.errored << " errored" << (score.partial ? " (PARTIAL)" : "") << "\n"
              << "parse: " << score.parse_clean << " clean, " << score.parse_recovered
              << " recovered, " << score.parse_failed << " failed\n"
              << "micro  P " << text::format_percent(score.micro.precision) << "  R "
              << text::format_percent(score.micro.recall) << "  F1 "
              << text::format_percent(score.micro.f1) << "\n"
              << "macro  P " << text::format_percent(score.macro.precision) << "  R "
              << text::format_percent(score.macro.recall) << "  F1 "
              << text::format_percent(score.macro.f1) << "\n";
}

int cmd_validate_data(const std::string& corpus_path, const std::string& catalog_path,
                      bool json_out) {
    Corpus corpus = load_corpus(corpus_path, catalog_path);
    std::size_t labels = 0;
    for (const auto& [sid, tropes] : corpus.truth.labels) labels += tropes.size();
    ordered_json doc;
    doc["ok"] = true;
    doc["synopses"] = corpus.synopses.size();
    doc["tropes"] = corpus.catalog.size();
    doc["labels"] = labels;
    if (json_out) {
        emit(doc, true);
    } else {
        std::cout << "ok: " << corpus.synopses.size() << " synopses, " << corpus.catalog.size()
                  << " tropes, " << labels << " labels\n";
    }
    return 0;
}

int cmd_stats(const std::string& corpus_path, const std::string& catalog_path, bool json_out) {
    Corpus corpus = load_corpus(corpus_path, catalog_path);
    DatasetStats stats = compute_stats(corpus);
    if (json_out) {
        ordered_json doc;
        doc["synopses"] = corpus.synopses.size();
        doc["tropes"] = corpus.catalog.size();
        doc["words_per_plot"] = quantity_to_json(stats.words_per_plot);
        doc["sentences_per_plot"] = quantity_to_json(stats.sentences_per_plot);
        doc["tropes_per_plot"] = quantity_to_json(stats.tropes_per_plot);
        doc["occurrences_per_trope"] = quantity_to_json(stats.occurrences_per_trope);
        emit(doc, true);
    } else {
        std::cout << corpus.synopses.size() << " synopses, " << corpus.catalog.size()
                  << " tropes\n";
        print_quantity("words/plot", stats.words_per_plot);
        print_quantity("sentences/plot", stats.sentences_per_plot);
        print_quantity("tropes/plot", stats.tropes_per_plot);
        print_quantity("occurrences/trope", stats.occurrences_per_trope);
    }
    return 0;
}

int cmd_run(const std::string& config_path, bool live, const std::string& runs_dir,
            const std::string& cache_dir, int stop_after, bool json_out) {
    ExperimentConfig config = load_config(config_path);
    if (config.provider.kind == "http" && !live) {
        throw ValidationError("config uses a live http provider; pass --live to allow network");
    }
    Corpus corpus = load_corpus(config.corpus_path, config.catalog_path);
    TemplateSet templates = load_templates(config);
    if (config.template_version.empty()) config.template_version = templates.version();
    QueryPlan plan = plan_queries(config, corpus, templates);
    fs::path run_dir = init_run_dir(runs_dir, config, plan);

    std::unique_ptr<Provider> provider = make_provider(config);
    ResponseCache cache(cache_dir);
    ExecuteOptions exec_options;
    if (stop_after >= 0) exec_options.stop_after_items = stop_after;

    ExecuteStats stats;
    try {
        stats = execute(run_dir, config, plan, corpus, *provider, cache, exec_options);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::ifstream ledger(run_dir / "items.jsonl");
        std::string line;
        bool progress = ledger && std::getline(ledger, line) && !line.empty();
        return progress ? 2 : 1;
    }

    LoadedRun run = load_run(run_dir);
    ordered_json doc;
    doc["run_dir"] = run_dir.string();
    doc["planned"] = plan.items.size();
    doc["skipped"] = stats.skipped;
    doc["fetched"] = stats.fetched;
    doc["cache_hits"] = stats.cache_hits;
    doc["item_errors"] = stats.errors;
    doc["status"] = run.status;
    if (json_out) {
        emit(doc, true);
    } else {
        std::cout << "run dir: " << run_dir.string() << "\n"
                  << "planned " << plan.items.size() << ", skipped " << stats.skipped
                  << ", fetched " << stats.fetched << " (" << stats.cache_hits << " cache hits), "
                  << stats.errors << " item errors\n"
                  << "status: " << run.status << "\n";
    }
    return 0;
}

int cmd_resume(const std::string& run_dir_arg, bool live, const std::string& cache_dir,
               bool json_out) {
    fs::path run_dir(run_dir_arg);
    std::ifstream config_in(run_dir / "config.json");
    if (!config_in) throw ValidationError("no config.json under " + run_dir.string());
    std::string config_text((std::istreambuf_iterator<char>(config_in)),
                            std::istreambuf_iterator<char>());
    ExperimentConfig config = config_from_json(config_text);
    if (config.provider.kind == "http" && !live) {
        throw ValidationError("run uses a live http provider; pass --live to allow network");
    }
    Corpus corpus = load_corpus(config.corpus_path, config.catalog_path);
    TemplateSet templates = load_templates(config);
    QueryPlan plan = plan_queries(config, corpus, templates);

    std::ifstream plan_in(run_dir / "plan.json");
    if (!plan_in) throw ValidationError("no plan.json under " + run_dir.string());
    ordered_json stored = ordered_json::parse(plan_in);
    if (stored.value("fingerprint", "") != plan.fingerprint()) {
        throw ValidationError("stored plan does not match the config; refusing to resume");
    }

    std::unique_ptr<Provider> provider = make_provider(config);
    ResponseCache cache(cache_dir);
    ExecuteStats stats = execute(run_dir, config, plan, corpus, *provider, cache, {});

    LoadedRun run = load_run(run_dir);
    ordered_json doc;
    doc["run_dir"] = run_dir.string();
    doc["skipped"] = stats.skipped;
    doc["fetched"] = stats.fetched;
    doc["cache_hits"] = stats.cache_hits;
    doc["item_errors"] = stats.errors;
    doc["status"] = run.status;
    if (json_out) {
        emit(doc, true);
    } else {
        std::cout << "resumed " << run_dir.string() << ": skipped " << stats.skipped
                  << ", fetched " << stats.fetched << ", status " << run.status << "\n";
    }
    return 0;
}

int cmd_score(const std::string& run_dir_arg, bool json_out) {
    fs::path run_dir(run_dir_arg);
    LoadedRun run = load_run(run_dir);
    Corpus corpus = load_corpus(run.config.corpus_path, run.config.catalog_path);
    RunScore score = score_run(run, corpus);

    ordered_json doc = score_to_json(score, run_dir, run.config);
    {
        std::ofstream out(run_dir / "metrics.json", std::ios::trunc);
        out << doc.dump(2) << "\n";
    }
    if (json_out) {
        emit(doc, true);
    } else {
        print_score_summary(score, run_dir);
        std::cout << "metrics written to " << (run_dir / "metrics.json").string() << "\n";
    }
    return score.partial ? 2 : 0;
}

int cmd_report(const std::string& run_dir_arg, const std::string& format,
               const std::string& out_path, int audit_n, std::uint64_t audit_seed, int bin_width,
               int rank_k) {
    fs::path run_dir(run_dir_arg);
    LoadedRun run = load_run(run_dir);
    Corpus corpus = load_corpus(run.config.corpus_path, run.config.catalog_path);
    RunScore score = score_run(run, corpus);

    std::string rendered;
    if (format == "csv") {
        rendered = score_to_csv(score);
    } else {
        ordered_json doc = score_to_json(score, run_dir, run.config);
        int k = std::min<int>(rank_k, static_cast<int>(score.per_trope.by_trope.size()));
        RankedTropes ranked = rank_tropes(score.per_trope, k);
        ordered_json easiest = ordered_json::array();
        for (const auto& [name, f1] : ranked.easiest) {
            easiest.push_back({{"trope", name}, {"f1_pct", text::format_percent(f1)}});
        }
        ordered_json hardest = ordered_json::array();
        for (const auto& [name, f1] : ranked.hardest) {
            hardest.push_back({{"trope", name}, {"f1_pct", text::format_percent(f1)}});
        }
        doc["easiest"] = std::move(easiest);
        doc["hardest"] = std::move(hardest);
        if (bin_width > 0) {
            LengthBinReport bins = length_accuracy(score.scored, bin_width);
            ordered_json jbins = ordered_json::array();
            for (const auto& bin : bins.bins) {
                jbins.push_back({{"lo", bin.lo},
                                 {"hi", bin.hi},
                                 {"total", bin.total},
                                 {"correct", bin.correct},
                                 {"accuracy", bin.accuracy}});
            }
            doc["length_bins"] = std::move(jbins);
        }
        if (audit_n > 0) {
            std::map<Pair, CoTPrediction> cot;
            for (const auto& item : run.items) {
                if (item.cot && item.trope) cot[{item.synopsis_id, *item.trope}] = *item.cot;
            }
            AuditSheet sheet = sample_audit(score.scored, cot, corpus, audit_n, audit_seed);
            ordered_json jcases = ordered_json::array();
            for (const auto& c : sheet.cases) {
                ordered_json cited = ordered_json::array();
                for (const auto& [idx, sentence] : c.cited_sentences) {
                    cited.push_back({{"index", idx}, {"text", sentence}});
                }
                ordered_json thoughts = ordered_json::array();
                for (const auto& t : c.thoughts) {
                    thoughts.push_back({{"reasoning", t.reasoning},
                                        {"evidence", t.evidence},
                                        {"relevant_paragraphs", t.relevant_paragraphs}});
                }
                jcases.push_back({{"synopsis_id", c.synopsis_id},
                                  {"trope", c.trope},
                                  {"thoughts", std::move(thoughts)},
                                  {"cited_sentences", std::move(cited)},
                                  {"raw", c.raw},
                                  {"verdict", c.verdict}});
            }
            doc["audit"] = {{"seed", sheet.seed}, {"cases", std::move(jcases)}};
        }
        rendered = doc.dump(2) + "\n";
    }

    if (out_path.empty()) {
        std::cout << rendered;
    } else {
        std::ofstream out(out_path, std::ios::trunc | std::ios::binary);
        if (!out) throw ValidationError("cannot write " + out_path);
        out << rendered;
        std::cout << "report written to " << out_path << "\n";
    }
    return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, bool json_out) {
    LoadedRun run_a = load_run(dir_a);
    LoadedRun run_b = load_run(dir_b);
    Corpus corpus_a = load_corpus(run_a.config.corpus_path, run_a.config.catalog_path);
    Corpus corpus_b = load_corpus(run_b.config.corpus_path, run_b.config.catalog_path);
    RunScore score_a = score_run(run_a, corpus_a);
    RunScore score_b = score_run(run_b, corpus_b);
    CompareReport report = compare_runs(score_a, score_b);

    if (json_out) {
        ordered_json doc;
        doc["run_a"] = dir_a;
        doc["run_b"] = dir_b;
        doc["micro_a"] = prf_to_json(report.micro_a);
        doc["micro_b"] = prf_to_json(report.micro_b);
        doc["delta"] = {{"precision", report.delta_precision},
                        {"recall", report.delta_recall},
                        {"f1", report.delta_f1}};
        ordered_json gaps = ordered_json::array();
        for (const auto& gap : report.gaps) {
            gaps.push_back({{"trope", gap.trope},
                            {"f1_a", gap.f1_a},
                            {"f1_b", gap.f1_b},
                            {"gap", gap.gap}});
        }
        doc["gaps"] = std::move(gaps);
        emit(doc, true);
    } else {
        std::cout << "A: F1 " << text::format_percent(report.micro_a.f1) << "  B: F1 "
                  << text::format_percent(report.micro_b.f1) << "  delta "
                  << text::format_percent(report.delta_f1) << "\n";
        std::size_t shown = std::min<std::size_t>(report.gaps.size(), 10);
        for (std::size_t i = 0; i < shown; ++i) {
            const auto& gap = report.gaps[i];
            std::cout << "  " << gap.trope << ": " << text::format_percent(gap.f1_a) << " vs "
                      << text::format_percent(gap.f1_b) << " (gap "
                      << text::format_percent(gap.gap) << ")\n";
        }
    }
    return 0;
}

int cmd_attack(const std::string& spec_path, const std::string& prompt_mode_arg,
               const std::string& model, const std::string& corpus_path,
               const std::string& catalog_path, const std::string& fixture, double random_p,
               std::uint64_t random_seed, bool live, const std::string& base_url,
               const std::string& api_key_env, int insert_at_flag, bool no_pre, int max_retries,
               bool json_out) {
    AttackSpec spec = load_attack_spec(spec_path);
    Corpus corpus = load_corpus(corpus_path, catalog_path);
    const TropeEntry* entry = corpus.catalog.find(spec.components.trope);
    if (!entry) {
        throw ValidationError("attack trope not in catalog: " + spec.components.trope);
    }
    const std::string trope = entry->name;

    std::unique_ptr<Provider> provider;
    int sources = (!fixture.empty() ? 1 : 0) + (random_p >= 0 ? 1 : 0) + (live ? 1 : 0);
    if (sources != 1) {
        throw ValidationError("choose exactly one of --fixture, --random-p, or --live");
    }
    if (!fixture.empty()) {
        provider = ScriptedProvider::from_file(fixture);
    } else if (live) {
        if (base_url.empty()) throw ValidationError("--live needs --base-url");
        ProviderConfig http;
        http.base_url = base_url;
        http.auth_env = api_key_env;
        provider = std::make_unique<HttpProvider>(http);
    } else {
        provider = std::make_unique<RandomProvider>(random_p, random_seed);
    }

    AttackOptions options;
    auto pm = prompt_mode_from_string(prompt_mode_arg);
    if (!pm) throw ValidationError("prompt mode must be base or cot");
    options.prompt_mode = *pm;
    options.model = model;
    options.query_pre = !no_pre;
    options.max_retries = max_retries;
    if (insert_at_flag >= 0) {
        options.insert_at = insert_at_flag;
    } else if (spec.insert_at) {
        options.insert_at = spec.insert_at;
    }

    std::vector<std::string> targets =
        select_targets(corpus, corpus.truth, trope, spec.n_targets, spec.seed);
    AttackRunResult result =
        run_attack(corpus, targets, spec.donor_text, trope, *provider, options);
    if (result.records.empty()) {
        std::cerr << "error: all " << result.errors.size() << " targets errored\n";
        for (const auto& err : result.errors) {
            std::cerr << "  " << err.target_id << " [" << err.stage << "] " << err.message << "\n";
        }
        return 1;
    }
    AttackReport report = compute_attack_report(result.records, options.prompt_mode);

    ordered_json doc;
    doc["trope"] = report.trope;
    doc["prompt_mode"] = to_string(report.prompt_mode);
    doc["removed_component"] = spec.components.removed;
    doc["n_targets"] = report.n_targets;
    doc["n_misled"] = report.n_misled;
    doc["success_rate_pct"] = report.success_rate_pct;
    if (report.flip_rate_pct) {
        doc["n_pre_no"] = report.n_pre_no;
        doc["flip_rate_pct"] = *report.flip_rate_pct;
    }
    doc["errors"] = result.errors.size();
    if (json_out) {
        emit(doc, true);
    } else {
        std::cout << "attack " << report.trope << " (" << to_string(report.prompt_mode)
                  << "): " << report.n_misled << "/" << report.n_targets << " misled = "
                  << report.success_rate_pct << "%\n";
        if (report.flip_rate_pct) {
            std::cout << "flips among pre-no (" << report.n_pre_no
                      << "): " << *report.flip_rate_pct << "%\n";
        }
        if (!result.errors.empty()) {
            std::cout << result.errors.size() << " targets errored (excluded)\n";
        }
    }
    return 0;
}

int cmd_cache_info(const std::string& cache_dir, bool json_out) {
    fs::path dir(cache_dir);
    std::size_t entries = 0;
    bool exists = fs::exists(dir);
    if (exists) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".json") ++entries;
        }
    }
    if (json_out) {
        emit({{"dir", cache_dir}, {"exists", exists}, {"entries", entries}}, true);
    } else {
        std::cout << cache_dir << ": " << (exists ? std::to_string(entries) + " entries"
                                                  : std::string("missing")) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trope classification evaluation harness for chat-completion models"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    bool json_out = false;
    app.add_flag("--json", json_out, "emit a single JSON document on stdout");

    std::string corpus_path, catalog_path;
    auto* validate = app.add_subcommand("validate-data", "load and validate corpus + catalog");
    validate->fallthrough();
    validate->add_option("corpus", corpus_path, "corpus JSONL path")->required();
    validate->add_option("catalog", catalog_path, "catalog JSON path")->required();

    auto* stats = app.add_subcommand("stats", "dataset statistics");
    stats->fallthrough();
    stats->add_option("corpus", corpus_path, "corpus JSONL path")->required();
    stats->add_option("catalog", catalog_path, "catalog JSON path")->required();

    std::string config_path, runs_dir = "runs", cache_dir = "cache";
    bool live = false;
    int stop_after = -1;
    auto* run = app.add_subcommand("run", "plan and execute an experiment");
    run->fallthrough();
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_flag("--live", live, "allow live http providers");
    run->add_option("--runs-dir", runs_dir, "run ledger root");
    run->add_option("--cache-dir", cache_dir, "response cache directory");
    run->add_option("--stop-after", stop_after, "stop once this many items are recorded");

    std::string resume_dir;
    auto* resume = app.add_subcommand("resume", "continue an interrupted run");
    resume->fallthrough();
    resume->add_option("run_dir", resume_dir, "run directory")->required();
    resume->add_flag("--live", live, "allow live http providers");
    resume->add_option("--cache-dir", cache_dir, "response cache directory");

    std::string score_dir;
    auto* score = app.add_subcommand("score", "score a run and write metrics.json");
    score->fallthrough();
    score->add_option("run_dir", score_dir, "run directory")->required();

    std::string report_dir, report_format = "json", report_out;
    int audit_n = 0, bin_width = 0, rank_k = 5;
    std::uint64_t audit_seed = 0;
    auto* report = app.add_subcommand("report", "render a scored report");
    report->fallthrough();
    report->add_option("run_dir", report_dir, "run directory")->required();
    report->add_option("--format", report_format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    report->add_option("-o,--out", report_out, "write to file instead of stdout");
    report->add_option("--audit-n", audit_n, "sample this many true positives for audit");
    report->add_option("--audit-seed", audit_seed, "audit sampling seed");
    report->add_option("--bin-width", bin_width, "character bin width for length analysis");
    report->add_option("--rank-k", rank_k, "easiest/hardest list length");

    std::string compare_a, compare_b;
    auto* compare = app.add_subcommand("compare", "diff two scored runs");
    compare->fallthrough();
    compare->add_option("run_a", compare_a, "first run directory")->required();
    compare->add_option("run_b", compare_b, "second run directory")->required();

    std::string attack_spec, attack_mode = "base", attack_model = "offline";
    std::string attack_corpus, attack_catalog, attack_fixture, attack_base_url;
    std::string attack_key_env = "API_KEY";
    double attack_random_p = -1.0;
    std::uint64_t attack_random_seed = 0;
    int attack_insert_at = -1, attack_retries = 0;
    bool attack_no_pre = false;
    auto* attack = app.add_subcommand("attack", "run a partial-element injection attack");
    attack->fallthrough();
    attack->add_option("--spec", attack_spec, "attack spec JSON")->required();
    attack->add_option("--prompt-mode", attack_mode, "base or cot")
        ->check(CLI::IsMember({"base", "cot"}));
    attack->add_option("--model", attack_model, "model id");
    attack->add_option("--corpus", attack_corpus, "corpus JSONL path")->required();
    attack->add_option("--catalog", attack_catalog, "catalog JSON path")->required();
    attack->add_option("--fixture", attack_fixture, "scripted provider fixture");
    attack->add_option("--random-p", attack_random_p, "random provider yes-probability");
    attack->add_option("--random-seed", attack_random_seed, "random provider seed");
    attack->add_flag("--live", live, "use a live http provider");
    attack->add_option("--base-url", attack_base_url, "live endpoint base URL");
    attack->add_option("--api-key-env", attack_key_env, "env var holding the API key");
    attack->add_option("--insert-at", attack_insert_at, "override injection position");
    attack->add_flag("--no-pre", attack_no_pre, "skip pre-injection queries");
    attack->add_option("--max-retries", attack_retries, "transient-error retries");

    std::string cache_info_dir;
    auto* cache_info = app.add_subcommand("cache-info", "describe a response cache directory");
    cache_info->fallthrough();
    cache_info->add_option("cache_dir", cache_info_dir, "cache directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate_data(corpus_path, catalog_path, json_out);
        if (stats->parsed()) return cmd_stats(corpus_path, catalog_path, json_out);
        if (run->parsed()) {
            return cmd_run(config_path, live, runs_dir, cache_dir, stop_after, json_out);
        }
        if (resume->parsed()) return cmd_resume(resume_dir, live, cache_dir, json_out);
        if (score->parsed()) return cmd_score(score_dir, json_out);
        if (report->parsed()) {
            return cmd_report(report_dir, report_format, report_out, audit_n, audit_seed,
                              bin_width, rank_k);
        }
        if (compare->parsed()) return cmd_compare(compare_a, compare_b, json_out);
        if (attack->parsed()) {
            return cmd_attack(attack_spec, attack_mode, attack_model, attack_corpus,
                              attack_catalog, attack_fixture, attack_random_p, attack_random_seed,
                              live, attack_base_url, attack_key_env, attack_insert_at,
                              attack_no_pre, attack_retries, json_out);
        }
        if (cache_info->parsed()) return cmd_cache_info(cache_info_dir, json_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no command\n";
    return 1;
}
