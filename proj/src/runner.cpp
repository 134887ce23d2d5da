#include "tropeval/runner.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "tropeval/hash.hpp"
#include "tropeval/rng.hpp"

namespace tropeval {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

json provider_to_json(const ProviderSpec& p) {
    json j;
    j["kind"] = p.kind;
    if (p.kind == "scripted") {
        j["fixture"] = p.fixture;
    } else if (p.kind == "random") {
        j["yes_probability"] = p.yes_probability;
        j["seed"] = p.seed;
    } else if (p.kind == "http") {
        j["base_url"] = p.http.base_url;
        j["auth_env"] = p.http.auth_env;
        j["timeout_s"] = p.http.timeout_s;
        j["max_retries"] = p.http.max_retries;
        j["max_parallel"] = p.http.max_parallel;
    }
    return j;
}

ProviderSpec provider_from_json(const json& j) {
    ProviderSpec p;
    p.kind = j.value("kind", "scripted");
    if (p.kind == "scripted") {
        p.fixture = j.value("fixture", "");
    } else if (p.kind == "random") {
        p.yes_probability = j.value("yes_probability", 0.5);
        p.seed = j.value("seed", std::uint64_t{0});
    } else if (p.kind == "http") {
        p.http.base_url = j.value("base_url", "");
        p.http.auth_env = j.value("auth_env", "");
        p.http.timeout_s = j.value("timeout_s", 60);
        p.http.max_retries = j.value("max_retries", 3);
        p.http.max_parallel = j.value("max_parallel", 4);
    } else {
        throw ValidationError("unknown provider kind: " + p.kind);
    }
    return p;
}

json config_to_json_value(const ExperimentConfig& c) {
    json j;
    j["model"] = c.model;
    j["provider"] = provider_to_json(c.provider);
    j["query_mode"] = to_string(c.query_mode);
    j["prompt_mode"] = to_string(c.prompt_mode);
    j["with_definitions"] = c.with_definitions;
    j["exemplar_id"] = c.exemplar_id;
    json subset;
    if (c.subset.n_synopses) {
        subset["n_synopses"] = *c.subset.n_synopses;
    } else {
        subset["n_synopses"] = nullptr;
    }
    subset["trope_names"] = c.subset.trope_names;
    if (c.subset.n_tropes) {
        subset["n_tropes"] = *c.subset.n_tropes;
    } else {
        subset["n_tropes"] = nullptr;
    }
    subset["trope_seed"] = c.subset.trope_seed;
    j["subset"] = std::move(subset);
    j["sample_seed"] = c.sample_seed;
    j["template_version"] = c.template_version;
    j["corpus_path"] = c.corpus_path;
    j["catalog_path"] = c.catalog_path;
    j["templates_dir"] = c.templates_dir;
    j["max_parallel"] = c.max_parallel;
    j["max_retries"] = c.max_retries;
    return j;
}

ExperimentConfig config_from_json_value(const json& j) {
    ExperimentConfig c;
    c.model = j.value("model", "offline");
    if (j.contains("provider")) c.provider = provider_from_json(j["provider"]);
    if (auto qm = query_mode_from_string(j.value("query_mode", "trope_wise"))) {
        c.query_mode = *qm;
    } else {
        throw ValidationError("unknown query_mode: " + j["query_mode"].get<std::string>());
    }
    if (auto pm = prompt_mode_from_string(j.value("prompt_mode", "base"))) {
        c.prompt_mode = *pm;
    } else {
        throw ValidationError("unknown prompt_mode: " + j["prompt_mode"].get<std::string>());
    }
    c.with_definitions = j.value("with_definitions", false);
    c.exemplar_id = j.value("exemplar_id", "example1");
    if (j.contains("subset")) {
        const json& s = j["subset"];
        if (s.contains("n_synopses") && !s["n_synopses"].is_null()) {
            c.subset.n_synopses = s["n_synopses"].get<int>();
        }
        if (s.contains("trope_names")) {
            for (const auto& name : s["trope_names"]) {
                c.subset.trope_names.push_back(name.get<std::string>());
            }
        }
        if (s.contains("n_tropes") && !s["n_tropes"].is_null()) {
            c.subset.n_tropes = s["n_tropes"].get<int>();
        }
        c.subset.trope_seed = s.value("trope_seed", std::uint64_t{0});
    }
    c.sample_seed = j.value("sample_seed", std::uint64_t{0});
    c.template_version = j.value("template_version", "");
    c.corpus_path = j.value("corpus_path", "");
    c.catalog_path = j.value("catalog_path", "");
    c.templates_dir = j.value("templates_dir", "");
    c.max_parallel = j.value("max_parallel", 4);
    c.max_retries = j.value("max_retries", 0);
    if (c.max_parallel < 1) throw ValidationError("max_parallel must be >= 1");
    if (c.max_retries < 0) throw ValidationError("max_retries must be >= 0");
    return c;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json plan_to_json_value(const QueryPlan& plan) {
    json j;
    j["synopsis_ids"] = plan.synopsis_ids;
    j["tropes"] = plan.tropes;
    json items = json::array();
    for (const auto& item : plan.items) {
        json ji;
        ji["index"] = item.index;
        ji["synopsis_id"] = item.synopsis_id;
        if (item.trope) ji["trope"] = *item.trope;
        ji["prompt_fingerprint"] = item.prompt_fingerprint;
        items.push_back(std::move(ji));
    }
    j["items"] = std::move(items);
    return j;
}

QueryPlan plan_from_json_value(const json& j) {
    QueryPlan plan;
    for (const auto& s : j.at("synopsis_ids")) plan.synopsis_ids.push_back(s.get<std::string>());
    for (const auto& t : j.at("tropes")) plan.tropes.push_back(t.get<std::string>());
    for (const auto& ji : j.at("items")) {
        QueryItem item;
        item.index = ji.at("index").get<int>();
        item.synopsis_id = ji.at("synopsis_id").get<std::string>();
        if (ji.contains("trope")) item.trope = ji["trope"].get<std::string>();
        item.prompt_fingerprint = ji.at("prompt_fingerprint").get<std::string>();
        plan.items.push_back(std::move(item));
    }
    return plan;
}

// Ascending index subset: seeded draw, then sorted to preserve source order.
std::vector<std::size_t> sorted_sample(std::size_t population, std::size_t k, std::uint64_t seed) {
    DeterministicRng rng(seed);
    std::vector<std::size_t> picks = rng.sample_indices(population, k);
    std::sort(picks.begin(), picks.end());
    return picks;
}

PromptSpec build_item_prompt(const ExperimentConfig& config, const Synopsis& synopsis,
                             const std::optional<std::string>& trope,
                             const TropeCatalog& sub_catalog, const TemplateSet& templates) {
    BuildOptions options;
    if (config.query_mode == QueryMode::trope_wise) {
        if (config.prompt_mode == PromptMode::cot) {
            return build_trope_wise_cot(synopsis, *trope, templates.exemplar(config.exemplar_id),
                                        templates, options);
        }
        return build_trope_wise_base(synopsis, *trope, templates, options);
    }
    return build_multi_label(synopsis, sub_catalog, config.prompt_mode, config.with_definitions,
                             templates, options, config.exemplar_id);
}

TropeCatalog make_sub_catalog(const TropeCatalog& catalog, const std::vector<std::string>& names) {
    std::vector<TropeEntry> entries;
    for (const auto& name : names) {
        const TropeEntry* entry = catalog.find(name);
        if (!entry) throw ValidationError("trope not in catalog: " + name);
        entries.push_back(*entry);
    }
    return TropeCatalog(std::move(entries));
}

struct FetchOutcome {
    bool ok = false;
    ChatResponse response;
    bool cache_hit = false;
    std::string error_type;
    std::string error_message;
};

std::size_t count_ledger_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return 0;
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++n;
    }
    return n;
}

void write_meta(const std::filesystem::path& run_dir, std::size_t done, std::size_t total,
                const ExperimentConfig& config, const std::string& splitter_id) {
    ordered_json meta;
    meta["status"] = done == total ? "complete" : (done == 0 ? "pending" : "partial");
    meta["completed_items"] = done;
    meta["total_items"] = total;
    meta["model"] = config.model;
    meta["template_version"] = config.template_version;
    meta["splitter_id"] = splitter_id;
    write_atomic(run_dir / "meta.json", meta.dump(2) + "\n");
}

ordered_json item_line(const QueryItem& item, const ExperimentConfig& config,
                       const FetchOutcome& outcome, const TropeCatalog& catalog) {
    ordered_json line;
    line["index"] = item.index;
    line["synopsis_id"] = item.synopsis_id;
    if (item.trope) line["trope"] = *item.trope;
    line["request_fingerprint"] = item.prompt_fingerprint;
    if (!outcome.ok) {
        line["error"] = {{"type", outcome.error_type}, {"message", outcome.error_message}};
        return line;
    }
    line["content"] = outcome.response.content;

    ordered_json prediction = ordered_json::object();
    ParseStatus status = ParseStatus::failed;
    if (config.query_mode == QueryMode::trope_wise && config.prompt_mode == PromptMode::base) {
        BinaryPrediction pred = parse_binary(outcome.response.content);
        status = pred.status;
        if (pred.answer) prediction["answer"] = to_string(*pred.answer);
    } else if (config.query_mode == QueryMode::trope_wise) {
        CoTPrediction pred = parse_cot_json(outcome.response.content);
        status = pred.status;
        if (pred.answer) prediction["answer"] = to_string(*pred.answer);
        if (!pred.trope.empty()) prediction["trope"] = pred.trope;
        if (pred.definition) prediction["definition"] = *pred.definition;
        ordered_json thoughts = ordered_json::array();
        for (const auto& t : pred.thoughts) {
            thoughts.push_back({{"reasoning", t.reasoning},
                                {"evidence", t.evidence},
                                {"relevant_paragraphs", t.relevant_paragraphs}});
        }
        prediction["thoughts"] = std::move(thoughts);
    } else {
        MultiLabelPrediction pred = parse_multi_label(outcome.response.content, catalog);
        status = pred.status;
        prediction["tropes"] = pred.tropes;
        prediction["out_of_catalog"] = pred.out_of_catalog;
    }
    line["parse_status"] = to_string(status);
    line["prediction"] = std::move(prediction);
    return line;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError("config is not a JSON object");
    return config_from_json_value(j);
}

std::string config_to_json(const ExperimentConfig& config) {
    return config_to_json_value(config).dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    ExperimentConfig config = config_from_json(read_file(path));
    const std::filesystem::path base = path.parent_path();
    auto resolve = [&](std::string& p) {
        if (p.empty()) return;
        std::filesystem::path as_path(p);
        if (as_path.is_relative()) p = (base / as_path).lexically_normal().string();
    };
    resolve(config.corpus_path);
    resolve(config.catalog_path);
    resolve(config.templates_dir);
    resolve(config.provider.fixture);
    return config;
}

std::string config_hash(const ExperimentConfig& config) {
    return sha256_hex(config_to_json_value(config).dump());
}

std::unique_ptr<Provider> make_provider(const ExperimentConfig& config) {
    const ProviderSpec& p = config.provider;
    if (p.kind == "scripted") {
        if (p.fixture.empty()) throw ValidationError("scripted provider needs a fixture path");
        return ScriptedProvider::from_file(p.fixture);
    }
    if (p.kind == "random") return std::make_unique<RandomProvider>(p.yes_probability, p.seed);
    if (p.kind == "http") return std::make_unique<HttpProvider>(p.http);
    throw ValidationError("unknown provider kind: " + p.kind);
}

TemplateSet load_templates(const ExperimentConfig& config) {
    TemplateSet templates = config.templates_dir.empty() ? TemplateSet::builtin()
                                                         : TemplateSet::load_dir(config.templates_dir);
    if (!config.template_version.empty() && config.template_version != templates.version()) {
        throw ValidationError("config pins template_version " + config.template_version +
                              " but templates are " + templates.version());
    }
    return templates;
}

std::string QueryPlan::fingerprint() const {
    return sha256_hex(plan_to_json_value(*this).dump());
}

QueryPlan plan_queries(const ExperimentConfig& config, const Corpus& corpus,
                       const TemplateSet& templates) {
    QueryPlan plan;

    std::vector<std::size_t> synopsis_indices(corpus.synopses.size());
    for (std::size_t i = 0; i < synopsis_indices.size(); ++i) synopsis_indices[i] = i;
    if (config.subset.n_synopses) {
        const int n = *config.subset.n_synopses;
        if (n < 0 || static_cast<std::size_t>(n) > corpus.synopses.size()) {
            throw ValidationError("subset asks for " + std::to_string(n) + " synopses; corpus has " +
                                  std::to_string(corpus.synopses.size()));
        }
        synopsis_indices = sorted_sample(corpus.synopses.size(), static_cast<std::size_t>(n),
                                         config.sample_seed);
    }
    for (std::size_t idx : synopsis_indices) plan.synopsis_ids.push_back(corpus.synopses[idx].id);

    std::vector<std::string> all_tropes = corpus.catalog.names();
    if (!config.subset.trope_names.empty()) {
        std::set<std::string> wanted;
        for (const auto& raw : config.subset.trope_names) {
            const TropeEntry* entry = corpus.catalog.find(raw);
            if (!entry) throw ValidationError("subset trope not in catalog: " + raw);
            wanted.insert(entry->name);
        }
        for (const auto& name : all_tropes) {
            if (wanted.count(name)) plan.tropes.push_back(name);
        }
    } else if (config.subset.n_tropes) {
        const int k = *config.subset.n_tropes;
        if (k < 0 || static_cast<std::size_t>(k) > all_tropes.size()) {
            throw ValidationError("subset asks for " + std::to_string(k) + " tropes; catalog has " +
                                  std::to_string(all_tropes.size()));
        }
        for (std::size_t idx : sorted_sample(all_tropes.size(), static_cast<std::size_t>(k),
                                             config.subset.trope_seed)) {
            plan.tropes.push_back(all_tropes[idx]);
        }
    } else {
        plan.tropes = all_tropes;
    }
    if (plan.tropes.empty()) throw ValidationError("plan has no tropes");
    if (plan.synopsis_ids.empty()) throw ValidationError("plan has no synopses");

    TropeCatalog sub_catalog = make_sub_catalog(corpus.catalog, plan.tropes);

    int index = 0;
    for (const auto& sid : plan.synopsis_ids) {
        const Synopsis* synopsis = corpus.find(sid);
        if (!synopsis) throw ValidationError("planned synopsis missing from corpus: " + sid);
        if (config.query_mode == QueryMode::trope_wise) {
            for (const auto& trope : plan.tropes) {
                QueryItem item;
                item.index = index++;
                item.synopsis_id = sid;
                item.trope = trope;
                item.prompt_fingerprint =
                    build_item_prompt(config, *synopsis, trope, sub_catalog, templates).fingerprint;
                plan.items.push_back(std::move(item));
            }
        } else {
            QueryItem item;
            item.index = index++;
            item.synopsis_id = sid;
            item.prompt_fingerprint =
                build_item_prompt(config, *synopsis, std::nullopt, sub_catalog, templates)
                    .fingerprint;
            plan.items.push_back(std::move(item));
        }
    }
    return plan;
}

std::filesystem::path init_run_dir(const std::filesystem::path& runs_dir,
                                   const ExperimentConfig& config, const QueryPlan& plan) {
    std::filesystem::path run_dir = runs_dir / ("run-" + config_hash(config).substr(0, 12));
    std::filesystem::create_directories(run_dir);

    const std::filesystem::path plan_path = run_dir / "plan.json";
    json plan_value = plan_to_json_value(plan);
    plan_value["fingerprint"] = plan.fingerprint();
    if (std::filesystem::exists(plan_path)) {
        json existing = json::parse(read_file(plan_path));
        if (existing.value("fingerprint", "") != plan_value["fingerprint"].get<std::string>()) {
            throw ValidationError("run dir " + run_dir.string() +
                                  " holds a different plan; refusing to mix runs");
        }
    } else {
        write_atomic(plan_path, plan_value.dump(2) + "\n");
        write_atomic(run_dir / "config.json", config_to_json(config));
        write_meta(run_dir, 0, plan.items.size(), config, kSplitterId);
    }
    return run_dir;
}

ExecuteStats execute(const std::filesystem::path& run_dir, const ExperimentConfig& config,
                     const QueryPlan& plan, const Corpus& corpus, Provider& provider,
                     ResponseCache& cache, const ExecuteOptions& options) {
    ExecuteStats stats;
    const std::filesystem::path ledger_path = run_dir / "items.jsonl";
    const std::filesystem::path timings_path = run_dir / "timings.jsonl";

    std::size_t done = count_ledger_lines(ledger_path);
    stats.skipped = static_cast<int>(done);
    const std::size_t total = plan.items.size();
    if (done > total) {
        throw ValidationError("ledger has more items than the plan; run dir is inconsistent");
    }

    std::size_t stop_at = total;
    if (options.stop_after_items) {
        stop_at = std::min<std::size_t>(total, static_cast<std::size_t>(*options.stop_after_items));
    }

    TemplateSet templates = load_templates(config);
    TropeCatalog sub_catalog = make_sub_catalog(corpus.catalog, plan.tropes);
    Sleeper sleep = options.sleep ? options.sleep : real_sleeper();

    std::ofstream ledger(ledger_path, std::ios::app | std::ios::binary);
    std::ofstream timings(timings_path, std::ios::app | std::ios::binary);
    if (!ledger) throw ValidationError("cannot append to " + ledger_path.string());

    const std::size_t chunk_cap = static_cast<std::size_t>(std::max(1, config.max_parallel));
    while (done < stop_at) {
        const std::size_t chunk = std::min(chunk_cap, stop_at - done);
        std::vector<std::future<FetchOutcome>> futures;
        futures.reserve(chunk);
        for (std::size_t offset = 0; offset < chunk; ++offset) {
            const QueryItem& item = plan.items[done + offset];
            futures.push_back(std::async(std::launch::async, [&, item]() {
                FetchOutcome outcome;
                try {
                    const Synopsis* synopsis = corpus.find(item.synopsis_id);
                    if (!synopsis) throw ValidationError("synopsis missing: " + item.synopsis_id);
                    PromptSpec prompt =
                        build_item_prompt(config, *synopsis, item.trope, sub_catalog, templates);
                    if (prompt.fingerprint != item.prompt_fingerprint) {
                        throw ValidationError("prompt fingerprint drift on item " +
                                              std::to_string(item.index) +
                                              "; plan was built with different templates");
                    }
                    ChatRequest request = make_request(prompt, config.model);
                    CompletionResult result =
                        cached_complete(request, provider, cache, config.max_retries, sleep);
                    outcome.ok = true;
                    outcome.response = result.response;
                    outcome.cache_hit = result.cache_hit;
                } catch (const AuthError&) {
                    throw;  // configuration problem: abort the run
                } catch (const ExhaustedRetries& e) {
                    outcome.error_type = "exhausted_retries";
                    outcome.error_message = e.what();
                } catch (const UnmatchedRequest& e) {
                    outcome.error_type = "unmatched_request";
                    outcome.error_message = e.what();
                } catch (const BudgetExceeded& e) {
                    outcome.error_type = "budget_exceeded";
                    outcome.error_message = e.what();
                } catch (const ValidationError& e) {
                    throw;  // plan/corpus mismatch: abort the run
                } catch (const std::exception& e) {
                    outcome.error_type = "client_error";
                    outcome.error_message = e.what();
                }
                return outcome;
            }));
        }
        for (std::size_t offset = 0; offset < chunk; ++offset) {
            const QueryItem& item = plan.items[done + offset];
            FetchOutcome outcome = futures[offset].get();
            ledger << item_line(item, config, outcome, corpus.catalog).dump() << "\n";
            ledger.flush();
            if (outcome.ok) {
                ++stats.fetched;
                if (outcome.cache_hit) ++stats.cache_hits;
                timings << ordered_json{{"index", item.index},
                                        {"latency_ms", outcome.response.latency_ms},
                                        {"cache_hit", outcome.cache_hit}}
                               .dump()
                        << "\n";
            } else {
                ++stats.fetched;
                ++stats.errors;
            }
        }
        done += chunk;
        write_meta(run_dir, done, total, config, kSplitterId);
    }
    return stats;
}

LoadedRun load_run(const std::filesystem::path& run_dir) {
    LoadedRun run;
    run.dir = run_dir;
    run.config = config_from_json(read_file(run_dir / "config.json"));
    json plan_value = json::parse(read_file(run_dir / "plan.json"));
    run.plan = plan_from_json_value(plan_value);

    std::ifstream ledger(run_dir / "items.jsonl");
    std::string line;
    while (ledger && std::getline(ledger, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ValidationError("corrupt ledger line in " + run_dir.string());
        ItemResult item;
        item.index = j.at("index").get<int>();
        item.synopsis_id = j.at("synopsis_id").get<std::string>();
        if (j.contains("trope")) item.trope = j["trope"].get<std::string>();
        item.request_fingerprint = j.value("request_fingerprint", "");
        if (j.contains("error")) {
            item.error = j["error"].value("type", "error") + ": " +
                         j["error"].value("message", "");
        } else {
            item.content = j.value("content", "");
            if (auto status = parse_status_from_string(j.value("parse_status", "failed"))) {
                item.parse_status = *status;
            }
            const json& prediction = j.value("prediction", json::object());
            if (prediction.contains("answer")) {
                item.answer = answer_from_string(prediction["answer"].get<std::string>());
            }
            if (prediction.contains("thoughts")) {
                CoTPrediction cot;
                cot.raw = *item.content;
                cot.status = item.parse_status;
                cot.answer = item.answer;
                cot.trope = prediction.value("trope", "");
                if (prediction.contains("definition")) {
                    cot.definition = prediction["definition"].get<std::string>();
                }
                for (const auto& jt : prediction["thoughts"]) {
                    ThoughtStep step;
                    step.reasoning = jt.value("reasoning", "");
                    step.evidence = jt.value("evidence", "");
                    for (const auto& ref : jt.value("relevant_paragraphs", json::array())) {
                        step.relevant_paragraphs.push_back(ref.get<int>());
                    }
                    cot.thoughts.push_back(std::move(step));
                }
                item.cot = std::move(cot);
            }
            if (prediction.contains("tropes")) {
                for (const auto& t : prediction["tropes"]) {
                    item.predicted_tropes.push_back(t.get<std::string>());
                }
            }
            if (prediction.contains("out_of_catalog")) {
                for (const auto& t : prediction["out_of_catalog"]) {
                    item.out_of_catalog.push_back(t.get<std::string>());
                }
            }
        }
        run.items.push_back(std::move(item));
    }

    if (run.items.size() == run.plan.items.size()) {
        run.status = "complete";
    } else if (run.items.empty()) {
        run.status = "pending";
    } else {
        run.status = "partial";
    }
    return run;
}

RunScore score_run(const LoadedRun& run, const Corpus& corpus) {
    RunScore score;
    score.planned = static_cast<int>(run.plan.items.size());
    score.scored.synopsis_ids = run.plan.synopsis_ids;
    score.scored.tropes = run.plan.tropes;
    for (const auto& sid : run.plan.synopsis_ids) {
        const Synopsis* synopsis = corpus.find(sid);
        if (!synopsis) throw ValidationError("scored synopsis missing from corpus: " + sid);
        score.scored.synopsis_chars[sid] = static_cast<int>(synopsis->text.size());
        if (!corpus.truth.labels.count(sid)) {
            throw ValidationError("no ground truth for synopsis " + sid);
        }
    }
    const std::set<std::string> trope_set(run.plan.tropes.begin(), run.plan.tropes.end());

    for (const auto& item : run.items) {
        if (item.error) {
            ++score.errored;
            continue;
        }
        ++score.answered;
        switch (item.parse_status) {
            case ParseStatus::clean: ++score.parse_clean; break;
            case ParseStatus::recovered: ++score.parse_recovered; break;
            case ParseStatus::failed: ++score.parse_failed; break;
        }
        if (run.config.query_mode == QueryMode::trope_wise) {
            Pair pair{item.synopsis_id, *item.trope};
            score.scored.universe.insert(pair);
            if (item.answer && *item.answer == Answer::yes) score.scored.predicted.insert(pair);
            if (item.cot) {
                const Synopsis* synopsis = corpus.find(item.synopsis_id);
                GroundingReport g = validate_grounding(*item.cot, *synopsis);
                score.grounding.total_refs += g.total_refs;
                score.grounding.in_range += g.in_range;
                score.grounding.out_of_range_indices.insert(
                    score.grounding.out_of_range_indices.end(), g.out_of_range_indices.begin(),
                    g.out_of_range_indices.end());
            }
        } else {
            for (const auto& trope : run.plan.tropes) {
                score.scored.universe.insert({item.synopsis_id, trope});
            }
            for (const auto& trope : item.predicted_tropes) {
                if (trope_set.count(trope)) {
                    score.scored.predicted.insert({item.synopsis_id, trope});
                } else {
                    ++score.out_of_scope_predictions;
                }
            }
            score.out_of_catalog_mentions += static_cast<long long>(item.out_of_catalog.size());
        }
    }
    for (const auto& cell : score.scored.universe) {
        if (corpus.truth.has(cell.synopsis_id, cell.trope)) score.scored.gold.insert(cell);
    }
    if (score.answered > 0) {
        score.parse_failure_rate = static_cast<double>(score.parse_failed) / score.answered;
    }
    score.partial = run.status != "complete" || score.errored > 0;

    score.micro = micro_prf(score.scored);
    score.per_trope = per_trope_prf(score.scored);
    score.macro = macro_average(score.per_trope);
    return score;
}

CompareReport compare_runs(const RunScore& a, const RunScore& b) {
    if (a.scored.universe != b.scored.universe) {
        throw ValidationError("runs do not share a scored universe");
    }
    CompareReport report;
    report.micro_a = a.micro;
    report.micro_b = b.micro;
    report.delta_precision = a.micro.precision - b.micro.precision;
    report.delta_recall = a.micro.recall - b.micro.recall;
    report.delta_f1 = a.micro.f1 - b.micro.f1;
    report.gaps = diff_runs(a.scored, b.scored);
    return report;
}

}  // namespace tropeval
