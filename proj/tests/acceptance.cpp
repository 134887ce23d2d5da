// End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per criterion
// and exits nonzero if anything fails. Criteria 7b and 8 need external inputs
// (a user-supplied dataset, a live endpoint) and are skipped when the gating
// environment variables are unset.
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "tropeval/adversarial.hpp"
#include "tropeval/client.hpp"
#include "tropeval/corpus.hpp"
#include "tropeval/metrics.hpp"
#include "tropeval/parsing.hpp"
#include "tropeval/runner.hpp"
#include "tropeval/text.hpp"

using namespace tropeval;
namespace fs = std::filesystem;

namespace {

int g_failed = 0;

void pass(const std::string& id, const std::string& what) {
    std::cout << "PASS " << id << ": " << what << "\n";
}

void fail(const std::string& id, const std::string& what, const std::string& why) {
    ++g_failed;
    std::cout << "FAIL " << id << ": " << what << " -- " << why << "\n";
}

void skip(const std::string& id, const std::string& what, const std::string& why) {
    std::cout << "SKIP " << id << ": " << what << " (" << why << ")\n";
}

// Collects failure details within one criterion; empty = pass.
struct Check {
    std::ostringstream why;
    bool ok = true;

    void expect(bool cond, const std::string& detail) {
        if (cond) return;
        if (!ok) why << "; ";
        why << detail;
        ok = false;
    }
};

void run_criterion(const std::string& id, const std::string& what,
                   const std::function<void(Check&)>& body) {
    Check check;
    try {
        body(check);
    } catch (const std::exception& e) {
        check.expect(false, std::string("exception: ") + e.what());
    }
    if (check.ok) {
        pass(id, what);
    } else {
        fail(id, what, check.why.str());
    }
}

const std::string kSourceDir = TROPEVAL_SOURCE_DIR;
const std::string kFixtureConfig = kSourceDir + "/tests/fixtures/acceptance/config.json";

ExecuteOptions no_sleep() {
    ExecuteOptions options;
    options.sleep = [](std::chrono::milliseconds) {};
    return options;
}

struct FixtureRun {
    ExperimentConfig config;
    Corpus corpus;
    QueryPlan plan;
    fs::path run_dir;
    RunScore score;
};

// Runs the offline fixture end to end inside `tmp` and scores it.
FixtureRun run_fixture(const testutil::TempDir& tmp, ExperimentConfig config) {
    FixtureRun out{std::move(config), {}, {}, {}, {}};
    out.corpus = load_corpus(out.config.corpus_path, out.config.catalog_path);
    TemplateSet templates = load_templates(out.config);
    out.plan = plan_queries(out.config, out.corpus, templates);
    std::unique_ptr<Provider> provider = make_provider(out.config);
    ResponseCache cache(tmp.path / "cache");
    out.run_dir = init_run_dir(tmp.path / "runs", out.config, out.plan);
    execute(out.run_dir, out.config, out.plan, out.corpus, *provider, cache, no_sleep());
    out.score = score_run(load_run(out.run_dir), out.corpus);
    return out;
}

std::string read_transcript(const std::string& name) {
    return testutil::read_file(kSourceDir + "/tests/fixtures/transcripts/" + name);
}

// --- criterion 3: an independent pooled-count oracle -------------------------

struct OracleCounts {
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

OracleCounts pooled_counts(const ScoredRun& run) {
    OracleCounts c;
    for (const auto& cell : run.universe) {
        const bool g = run.gold.count(cell) > 0;
        const bool p = run.predicted.count(cell) > 0;
        if (g && p) ++c.tp;
        if (!g && p) ++c.fp;
        if (g && !p) ++c.fn;
        if (!g && !p) ++c.tn;
    }
    return c;
}

PRF oracle_prf(const OracleCounts& c) {
    PRF out;
    if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
    if (c.tp + c.fn > 0) out.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
    if (out.precision + out.recall > 0) {
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    }
    return out;
}

ScoredRun random_universe(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_syn(1, 6);
    std::uniform_int_distribution<int> n_trope(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScoredRun run;
    const int ns = n_syn(rng);
    const int nt = n_trope(rng);
    for (int i = 0; i < ns; ++i) run.synopsis_ids.push_back("s" + std::to_string(i));
    for (int t = 0; t < nt; ++t) run.tropes.push_back("T" + std::to_string(t));
    for (const auto& sid : run.synopsis_ids) {
        for (const auto& trope : run.tropes) {
            if (unit(rng) < 0.1) continue;  // simulate errored-out cells
            Pair cell{sid, trope};
            run.universe.insert(cell);
            if (unit(rng) < 0.35) run.gold.insert(cell);
            if (unit(rng) < 0.40) run.predicted.insert(cell);
        }
    }
    if (run.universe.empty()) {
        Pair cell{run.synopsis_ids[0], run.tropes[0]};
        run.universe.insert(cell);
        run.gold.insert(cell);
    }
    return run;
}

// --- criterion 7: synthetic corpus with hand-computed stats ------------------

const char* kWordBank[] = {"harbor", "lantern", "evening", "quiet",  "stone",  "meadow",
                           "letter", "winter",  "garden",  "bridge", "signal", "orchard"};

std::string make_text(const std::vector<int>& words_per_sentence) {
    std::string text;
    std::size_t w = 0;
    for (std::size_t s = 0; s < words_per_sentence.size(); ++s) {
        if (s > 0) text += " ";
        for (int i = 0; i < words_per_sentence[s]; ++i) {
            std::string word = kWordBank[w++ % (sizeof(kWordBank) / sizeof(kWordBank[0]))];
            if (i == 0) word[0] = static_cast<char>(std::toupper(word[0]));
            text += (i == 0 ? "" : " ") + word;
        }
        text += ".";
    }
    return text;
}

Corpus synthetic_stats_corpus() {
    // Word counts 10,12,14,16,18,20,50; sentence counts 1,1,2,2,2,3,3;
    // label-set sizes 1,1,2,2,3,3,9 over a 9-trope catalog.
    const std::vector<std::vector<int>> shapes = {
        {10}, {12}, {7, 7}, {8, 8}, {9, 9}, {7, 7, 6}, {17, 17, 16}};
    std::vector<TropeEntry> entries;
    for (int t = 1; t <= 9; ++t) {
        entries.push_back(TropeEntry{"Trope " + std::to_string(t), std::nullopt, std::nullopt});
    }
    const std::vector<std::set<std::string>> labels = {
        {"Trope 1"},
        {"Trope 2"},
        {"Trope 1", "Trope 2"},
        {"Trope 3", "Trope 4"},
        {"Trope 1", "Trope 5", "Trope 6"},
        {"Trope 2", "Trope 3", "Trope 7"},
        {"Trope 1", "Trope 2", "Trope 3", "Trope 4", "Trope 5", "Trope 6", "Trope 7", "Trope 8",
         "Trope 9"},
    };
    Corpus corpus;
    corpus.catalog = TropeCatalog(std::move(entries));
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        Synopsis syn;
        syn.id = "stat" + std::to_string(i + 1);
        syn.text = make_text(shapes[i]);
        syn.sentences = segment_sentences(syn.text);
        corpus.truth.labels[syn.id] = labels[i];
        corpus.synopses.push_back(std::move(syn));
    }
    return corpus;
}

std::string quantity_detail(const std::string& label, const QuantityStats& q) {
    std::ostringstream out;
    out << label << " median " << q.median << " mean " << q.mean << " min " << q.min << " max "
        << q.max;
    return out.str();
}

void expect_quantity(Check& check, const std::string& label, const QuantityStats& got,
                     double median, double mean, double min, double max) {
    check.expect(got.median == median && got.mean == mean && got.min == min && got.max == max,
                 quantity_detail(label + " mismatch:", got));
}

}  // namespace

int main() {
    run_criterion("criterion 1", "offline 5x3 fixture run scores micro P/R/F1 as engineered",
                  [](Check& check) {
        const auto t0 = std::chrono::steady_clock::now();
        testutil::TempDir tmp;
        ExperimentConfig config = load_config(kFixtureConfig);
        check.expect(config.provider.kind == "scripted",
                     "fixture must use the offline scripted provider");
        FixtureRun run = run_fixture(tmp, config);
        check.expect(run.plan.items.size() == 15, "expected a 5x3 plan");
        ConfusionCounts c =
            confusion(run.score.scored.gold, run.score.scored.predicted, run.score.scored.universe);
        check.expect(c.tp == 2 && c.fp == 1 && c.fn == 2,
                     "confusion counts tp=" + std::to_string(c.tp) + " fp=" +
                         std::to_string(c.fp) + " fn=" + std::to_string(c.fn));
        check.expect(std::abs(run.score.micro.precision - 0.6667) <= 1e-4, "precision off");
        check.expect(std::abs(run.score.micro.recall - 0.5000) <= 1e-4, "recall off");
        check.expect(std::abs(run.score.micro.f1 - 0.5714) <= 1e-4, "f1 off");
        const auto elapsed = std::chrono::steady_clock::now() - t0;
        check.expect(elapsed < std::chrono::seconds(5), "run took 5s or longer");
    });

    run_criterion("criterion 2", "reference transcripts parse to exact structures",
                  [](Check& check) {
        CoTPrediction adorkable = parse_cot_json(read_transcript("cot_yes_adorkable.txt"));
        check.expect(adorkable.status == ParseStatus::clean, "adorkable not clean");
        check.expect(adorkable.answer == Answer::yes, "adorkable answer");
        check.expect(adorkable.trope == "Adorkable", "adorkable trope");
        check.expect(adorkable.thoughts.size() == 1 &&
                         adorkable.thoughts[0].relevant_paragraphs == std::vector<int>{10},
                     "adorkable \"10\" must normalize to [10]");

        CoTPrediction sane = parse_cot_json(read_transcript("cot_no_only_sane_man.txt"));
        check.expect(sane.status == ParseStatus::clean, "only-sane-man not clean");
        check.expect(sane.answer == Answer::no, "only-sane-man answer");
        check.expect(sane.thoughts.size() == 1 &&
                         sane.thoughts[0].relevant_paragraphs.empty() &&
                         sane.thoughts[0].evidence == "N/A",
                     "only-sane-man \"N/A\" must normalize to []");

        CoTPrediction ex1 = parse_cot_json(read_transcript("example1_downer_ending.txt"));
        check.expect(ex1.status == ParseStatus::clean && ex1.answer == Answer::yes &&
                         ex1.trope == "Downer Ending" && ex1.thoughts.size() == 1 &&
                         ex1.thoughts[0].relevant_paragraphs == std::vector<int>{9},
                     "example1 structure");

        CoTPrediction ex2 = parse_cot_json(read_transcript("example2_asshole_victim.txt"));
        check.expect(ex2.status == ParseStatus::clean && ex2.answer == Answer::yes &&
                         ex2.trope == "Asshole Victim" && ex2.thoughts.size() == 2 &&
                         ex2.thoughts[0].relevant_paragraphs == std::vector<int>{0} &&
                         ex2.thoughts[1].relevant_paragraphs == std::vector<int>{1},
                     "example2 structure");
        check.expect(ex2.thoughts[1].evidence ==
                         "Ken is killed by Dixon during the confrontation, fitting the trope "
                         "where a character with negative traits ends up being a victim.",
                     "example2 evidence text");
    });

    run_criterion("criterion 3", "micro scoring equals the pooled-count oracle on 1000 universes",
                  [](Check& check) {
        std::mt19937_64 rng(12345);
        for (int trial = 0; trial < 1000; ++trial) {
            ScoredRun run = random_universe(rng);
            OracleCounts expected = pooled_counts(run);
            ConfusionCounts got = confusion(run.gold, run.predicted, run.universe);
            if (got.tp != expected.tp || got.fp != expected.fp || got.fn != expected.fn ||
                got.tn != expected.tn) {
                check.expect(false, "counts diverge at trial " + std::to_string(trial));
                return;
            }
            PRF want = oracle_prf(expected);
            PRF have = micro_prf(run);
            if (have.precision != want.precision || have.recall != want.recall ||
                have.f1 != want.f1) {
                check.expect(false, "P/R/F1 diverge at trial " + std::to_string(trial));
                return;
            }
        }
    });

    run_criterion("criterion 4", "attack rates format exactly and injection invariants hold",
                  [](Check& check) {
        const std::array<int, 6> misled = {19, 29, 24, 29, 22, 21};
        const std::array<std::string, 6> expected = {"63.33", "96.67", "80.00",
                                                     "96.67", "73.33", "70.00"};
        for (std::size_t i = 0; i < misled.size(); ++i) {
            std::vector<AttackRecord> records;
            for (int t = 0; t < 30; ++t) {
                AttackRecord record;
                record.spec.target_id = "t" + std::to_string(t);
                record.spec.trope = "Grid Trope";
                record.pre_answer = Answer::no;
                record.post_answer = t < misled[i] ? Answer::yes : Answer::no;
                record.misled = t < misled[i];
                records.push_back(std::move(record));
            }
            AttackReport report = compute_attack_report(records, PromptMode::base);
            check.expect(report.success_rate_pct == expected[i],
                         "cell " + std::to_string(i) + " printed " + report.success_rate_pct);
            check.expect(integer_count_for_rate(expected[i], 30) == misled[i],
                         "cell " + std::to_string(i) + " not invertible to its count");
        }

        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 100; ++trial) {
            std::uniform_int_distribution<int> n_dist(1, 8);
            std::uniform_int_distribution<int> k_dist(1, 4);
            const int n = n_dist(rng);
            const int k = k_dist(rng);
            std::string target_text, donor_text;
            for (int s = 0; s < n; ++s) {
                target_text += (s ? " " : "");
                target_text += "Target sentence number " + std::to_string(s) + " stands here.";
            }
            for (int s = 0; s < k; ++s) {
                donor_text += (s ? " " : "");
                donor_text += "Donor line number " + std::to_string(s) + " arrives intact.";
            }
            Synopsis target;
            target.id = "trial" + std::to_string(trial);
            target.text = target_text;
            target.sentences = segment_sentences(target_text);
            std::uniform_int_distribution<int> at_dist(0, n);
            const int at = at_dist(rng);

            Synopsis attacked = inject(target, donor_text, at);
            bool ok = attacked.sentences.size() == static_cast<std::size_t>(n + k) &&
                      attacked.id == target.id + "+inj";
            std::string joined;
            for (int s = 0; ok && s < n + k; ++s) {
                ok = attacked.sentences[s].index == s;
                const std::string& text = attacked.sentences[s].text;
                if (s < at) {
                    ok = ok && text == target.sentences[s].text;
                } else if (s < at + k) {
                    ok = ok && text.rfind("Donor line", 0) == 0;
                } else {
                    ok = ok && text == target.sentences[s - k].text;
                }
                joined += (s ? " " : "") + text;
            }
            ok = ok && attacked.text == joined &&
                 target.sentences.size() == static_cast<std::size_t>(n);
            if (!ok) {
                check.expect(false, "injection invariant broke at trial " + std::to_string(trial));
                return;
            }
        }
    });

    run_criterion("criterion 5", "identical configs replay byte-for-byte; resume only fetches the rest",
                  [](Check& check) {
        ExperimentConfig config = load_config(kFixtureConfig);
        testutil::TempDir tmp_a;
        FixtureRun run_a = run_fixture(tmp_a, config);
        testutil::TempDir tmp_b;
        FixtureRun run_b = run_fixture(tmp_b, config);
        check.expect(testutil::read_file((run_a.run_dir / "items.jsonl").string()) ==
                         testutil::read_file((run_b.run_dir / "items.jsonl").string()),
                     "parsed-prediction ledgers differ between identical runs");

        testutil::TempDir tmp_c;
        Corpus corpus = load_corpus(config.corpus_path, config.catalog_path);
        QueryPlan plan = plan_queries(config, corpus, load_templates(config));
        ResponseCache cache(tmp_c.path / "cache");
        fs::path run_dir = init_run_dir(tmp_c.path / "runs", config, plan);

        const int k = 4;
        auto interrupted = ScriptedProvider::from_file(config.provider.fixture);
        ExecuteOptions stop = no_sleep();
        stop.stop_after_items = k;
        execute(run_dir, config, plan, corpus, *interrupted, cache, stop);
        check.expect(interrupted->call_count() == k, "interrupted run should fetch exactly k");

        auto resumed = ScriptedProvider::from_file(config.provider.fixture);
        execute(run_dir, config, plan, corpus, *resumed, cache, no_sleep());
        check.expect(resumed->call_count() == static_cast<int>(plan.items.size()) - k,
                     "resume fetched " + std::to_string(resumed->call_count()) +
                         " instead of plan-size minus k");
        check.expect(load_run(run_dir).status == "complete", "resumed run incomplete");
    });

    run_criterion("criterion 6", "all-yes recall 1.0 with precision = gold density; all-no F1 0",
                  [](Check& check) {
        ExperimentConfig config = load_config(kFixtureConfig);
        config.provider.kind = "random";
        config.provider.seed = 7;

        config.provider.yes_probability = 1.0;
        config.model = "acceptance-all-yes";
        testutil::TempDir tmp_yes;
        FixtureRun all_yes = run_fixture(tmp_yes, config);
        long long gold_cells = 0;
        Corpus corpus = all_yes.corpus;
        for (const auto& sid : all_yes.plan.synopsis_ids) {
            for (const auto& trope : all_yes.plan.tropes) {
                if (corpus.truth.has(sid, trope)) ++gold_cells;
            }
        }
        const double density =
            static_cast<double>(gold_cells) / static_cast<double>(all_yes.plan.items.size());
        check.expect(std::abs(all_yes.score.micro.recall - 1.0) <= 1e-9, "all-yes recall");
        check.expect(std::abs(all_yes.score.micro.precision - density) <= 1e-9,
                     "all-yes precision vs analytic gold density");

        config.provider.yes_probability = 0.0;
        config.model = "acceptance-all-no";
        testutil::TempDir tmp_no;
        FixtureRun all_no = run_fixture(tmp_no, config);
        check.expect(std::abs(all_no.score.micro.f1) <= 1e-9, "all-no F1");
    });

    run_criterion("criterion 7", "dataset stats match hand-computed values on a synthetic corpus",
                  [](Check& check) {
        Corpus corpus = synthetic_stats_corpus();
        // Guard the construction itself before trusting the stats.
        std::vector<int> words, sentences;
        for (const auto& syn : corpus.synopses) {
            words.push_back(text::count_words(syn.text));
            sentences.push_back(static_cast<int>(syn.sentences.size()));
        }
        check.expect(words == std::vector<int>{10, 12, 14, 16, 18, 20, 50},
                     "synthetic word counts are off");
        check.expect(sentences == std::vector<int>{1, 1, 2, 2, 2, 3, 3},
                     "synthetic sentence counts are off");

        DatasetStats stats = compute_stats(corpus);
        expect_quantity(check, "words/plot", stats.words_per_plot, 16.0, 20.0, 10.0, 50.0);
        expect_quantity(check, "sentences/plot", stats.sentences_per_plot, 2.0, 2.0, 1.0, 3.0);
        expect_quantity(check, "tropes/plot", stats.tropes_per_plot, 2.0, 3.0, 1.0, 9.0);
    });

    {
        const char* timos_corpus = std::getenv("TROPEVAL_TIMOS_CORPUS");
        const char* timos_catalog = std::getenv("TROPEVAL_TIMOS_CATALOG");
        const std::string what = "user-supplied dataset tropes-per-plot median within 1 of 9";
        if (!timos_corpus || !timos_catalog) {
            skip("criterion 7b", what,
                 "set TROPEVAL_TIMOS_CORPUS and TROPEVAL_TIMOS_CATALOG to enable");
        } else {
            run_criterion("criterion 7b", what, [&](Check& check) {
                Corpus corpus = load_corpus(timos_corpus, timos_catalog);
                DatasetStats stats = compute_stats(corpus);
                check.expect(std::abs(stats.tropes_per_plot.median - 9.0) <= 1.0,
                             "median is " + std::to_string(stats.tropes_per_plot.median));
            });
        }
    }

    {
        const char* base_url = std::getenv("TROPEVAL_LIVE_BASE_URL");
        const char* model = std::getenv("TROPEVAL_LIVE_MODEL");
        const char* key_env = std::getenv("TROPEVAL_LIVE_API_KEY_ENV");
        const std::string what = "live 2x2 smoke run parses at least 3 of 4 and is scoreable";
        if (!base_url || !model) {
            skip("criterion 8", what,
                 "set TROPEVAL_LIVE_BASE_URL, TROPEVAL_LIVE_MODEL and optionally "
                 "TROPEVAL_LIVE_API_KEY_ENV to enable");
        } else {
            run_criterion("criterion 8", what, [&](Check& check) {
                ExperimentConfig config;
                config.model = model;
                config.provider.kind = "http";
                config.provider.http.base_url = base_url;
                config.provider.http.auth_env = key_env ? key_env : "API_KEY";
                config.corpus_path = kSourceDir + "/data/sample/corpus.jsonl";
                config.catalog_path = kSourceDir + "/data/sample/catalog.json";
                config.subset.n_synopses = 2;
                config.subset.n_tropes = 2;
                config.max_retries = 2;

                testutil::TempDir tmp;
                Corpus corpus = load_corpus(config.corpus_path, config.catalog_path);
                QueryPlan plan = plan_queries(config, corpus, load_templates(config));
                check.expect(plan.items.size() == 4, "expected a 2x2 plan");
                std::unique_ptr<Provider> provider = make_provider(config);
                ResponseCache cache(tmp.path / "cache");
                fs::path run_dir = init_run_dir(tmp.path / "runs", config, plan);
                execute(run_dir, config, plan, corpus, *provider, cache, {});

                LoadedRun run = load_run(run_dir);
                int parsed = 0;
                for (const auto& item : run.items) {
                    if (!item.error && item.parse_status != ParseStatus::failed) ++parsed;
                }
                check.expect(parsed >= 3, "only " + std::to_string(parsed) + " of 4 parsed");
                RunScore score = score_run(run, corpus);
                check.expect(score.answered >= 3, "run is not scoreable");
            });
        }
    }

    if (g_failed > 0) {
        std::cout << g_failed << " criterion check(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed (gated criteria may be skipped)\n";
    return 0;
}
