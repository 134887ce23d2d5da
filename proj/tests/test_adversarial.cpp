#include <doctest.h>

#include <algorithm>
#include <random>

#include "test_util.hpp"
#include "tropeval/adversarial.hpp"
#include "tropeval/text.hpp"

using namespace tropeval;

namespace {

Synopsis make_synopsis(const std::string& id, const std::string& text) {
    Synopsis s;
    s.id = id;
    s.text = text;
    s.sentences = segment_sentences(text);
    return s;
}

Corpus attack_corpus() {
    Corpus c;
    c.catalog = TropeCatalog({TropeEntry{"Big Bad", std::string("The main villain."),
                                         std::nullopt}});
    c.synopses.push_back(make_synopsis("t1", "Aldous mends fences. Aldous feeds the hens."));
    c.synopses.push_back(make_synopsis("t2", "Braddock paints the barn. Braddock naps at noon."));
    c.synopses.push_back(make_synopsis("t3", "Corvina tends the mill. Corvina hums a tune."));
    c.synopses.push_back(make_synopsis("t4", "Dreyfus schemes in shadow. Dreyfus rules the city."));
    c.truth.labels["t4"] = {"Big Bad"};
    return c;
}

const char* kDonor = "Voss arrives with a ledger. Voss demands the deed.";

}  // namespace

TEST_CASE("component specs insist on a removable part") {
    TropeComponentSpec ok{"Big Bad", {"is a bad character", "drives the story"},
                          "drives the story"};
    CHECK_NOTHROW(ok.validate());

    TropeComponentSpec missing{"Big Bad", {"is a bad character", "drives the story"}, "other"};
    CHECK_THROWS_AS(missing.validate(), ValidationError);

    TropeComponentSpec single{"Big Bad", {"is a bad character"}, "is a bad character"};
    CHECK_THROWS_AS(single.validate(), ValidationError);

    TropeComponentSpec unnamed{"", {"a", "b"}, "a"};
    CHECK_THROWS_AS(unnamed.validate(), ValidationError);
}

TEST_CASE("select_targets samples gold-negative synopses reproducibly") {
    Corpus c = attack_corpus();
    auto picked = select_targets(c, c.truth, "Big Bad", 2, 7);
    CHECK(picked.size() == 2);
    for (const auto& id : picked) {
        CHECK(id != "t4");  // the only gold positive
        CHECK(c.find(id) != nullptr);
    }
    CHECK(select_targets(c, c.truth, "Big Bad", 2, 7) == picked);

    auto all_negatives = select_targets(c, c.truth, "Big Bad", 3, 11);
    std::sort(all_negatives.begin(), all_negatives.end());
    CHECK(all_negatives == std::vector<std::string>{"t1", "t2", "t3"});

    CHECK(select_targets(c, c.truth, "Big Bad", 0, 7).empty());
    CHECK_THROWS_AS(select_targets(c, c.truth, "Big Bad", 4, 7), InsufficientTargets);
    CHECK_THROWS_AS(select_targets(c, c.truth, "Big Bad", -1, 7), std::invalid_argument);
}

TEST_CASE("inject splices the donor block and renumbers contiguously") {
    Synopsis target = make_synopsis("t1", "First event. Second event. Third event.");
    Synopsis attacked = inject(target, kDonor, 1);

    CHECK(attacked.id == "t1+inj");
    REQUIRE(attacked.sentences.size() == 5);
    for (size_t i = 0; i < attacked.sentences.size(); ++i) {
        CHECK(attacked.sentences[i].index == static_cast<int>(i));
    }
    CHECK(attacked.sentences[0].text == "First event.");
    CHECK(attacked.sentences[1].text == "Voss arrives with a ledger.");
    CHECK(attacked.sentences[2].text == "Voss demands the deed.");
    CHECK(attacked.sentences[3].text == "Second event.");
    CHECK(attacked.sentences[4].text == "Third event.");
    CHECK(attacked.text ==
          "First event. Voss arrives with a ledger. Voss demands the deed. Second event. "
          "Third event.");
    // The original is untouched.
    CHECK(target.sentences.size() == 3);
    CHECK(target.sentences[1].text == "Second event.");

    SUBCASE("boundary positions") {
        CHECK(inject(target, kDonor, 0).sentences[0].text == "Voss arrives with a ledger.");
        Synopsis at_end = inject(target, kDonor, 3);
        CHECK(at_end.sentences[2].text == "Third event.");
        CHECK(at_end.sentences[4].text == "Voss demands the deed.");
    }
    SUBCASE("out-of-range positions rejected") {
        CHECK_THROWS_AS(inject(target, kDonor, -1), std::out_of_range);
        CHECK_THROWS_AS(inject(target, kDonor, 4), std::out_of_range);
    }
}

TEST_CASE("inject invariants hold over randomized targets, donors, and positions") {
    std::mt19937_64 rng(5150);
    const char* words[] = {"Quill", "Harrow", "Belden", "Fife",  "Marsh",
                           "Ostler", "Penn",   "Rook",  "Sorrel", "Tern"};
    for (int trial = 0; trial < 100; ++trial) {
        CAPTURE(trial);
        auto sentence = [&](const char* tag, int i) {
            return std::string(words[rng() % 10]) + " " + tag + " number " + std::to_string(i) +
                   ".";
        };
        int n = 1 + static_cast<int>(rng() % 8);
        int k = 1 + static_cast<int>(rng() % 4);
        std::vector<std::string> target_sentences, donor_sentences;
        std::string target_text, donor_text;
        for (int i = 0; i < n; ++i) {
            target_sentences.push_back(sentence("target", i));
            if (i) target_text += " ";
            target_text += target_sentences.back();
        }
        for (int i = 0; i < k; ++i) {
            donor_sentences.push_back(sentence("donor", i));
            if (i) donor_text += " ";
            donor_text += donor_sentences.back();
        }
        Synopsis target = make_synopsis("syn", target_text);
        REQUIRE(target.sentences.size() == static_cast<size_t>(n));
        int insert_at = static_cast<int>(rng() % (n + 1));

        Synopsis attacked = inject(target, donor_text, insert_at);

        // Size and contiguous renumbering.
        REQUIRE(attacked.sentences.size() == static_cast<size_t>(n + k));
        for (int i = 0; i < n + k; ++i) CHECK(attacked.sentences[i].index == i);

        // Exact layout: prefix, donor block, suffix; nothing lost or reordered.
        for (int i = 0; i < insert_at; ++i) {
            CHECK(attacked.sentences[i].text == target_sentences[i]);
        }
        for (int i = 0; i < k; ++i) {
            CHECK(attacked.sentences[insert_at + i].text == donor_sentences[i]);
        }
        for (int i = insert_at; i < n; ++i) {
            CHECK(attacked.sentences[k + i].text == target_sentences[i]);
        }

        // Rendered text is the sentence join.
        std::string joined;
        for (const auto& s : attacked.sentences) {
            if (!joined.empty()) joined += " ";
            joined += s.text;
        }
        CHECK(attacked.text == joined);
    }
}

TEST_CASE("run_attack queries pre and post, excluding unanswerable targets") {
    Corpus c = attack_corpus();
    c.synopses.push_back(make_synopsis("t5", "Eustace mumbles riddles. Eustace stacks stones."));

    ScriptedProvider provider;
    provider.add_contains_rule("Voss", "Yes");      // any injected article
    provider.add_contains_rule("Braddock", "Yes");  // t2 already reads as positive
    provider.add_contains_rule("Eustace", "The plot thickens, hard to say.");  // unparseable
    provider.add_any_rule("No");

    AttackOptions options;
    options.prompt_mode = PromptMode::base;
    options.sleep = [](std::chrono::milliseconds) {};

    AttackRunResult result =
        run_attack(c, {"t1", "t2", "t3", "t5", "ghost"}, kDonor, "Big Bad", provider, options);

    REQUIRE(result.records.size() == 3);
    REQUIRE(result.errors.size() == 2);
    CHECK(result.errors[0].target_id == "t5");
    CHECK(result.errors[0].stage == "pre");
    CHECK(result.errors[1].target_id == "ghost");
    CHECK(result.errors[1].stage == "build");

    const AttackRecord& r1 = result.records[0];
    CHECK(r1.spec.target_id == "t1");
    CHECK(r1.spec.insert_at == 1);  // midpoint of two sentences
    CHECK(r1.pre_answer == Answer::no);
    CHECK(r1.post_answer == Answer::yes);
    CHECK(r1.misled);

    const AttackRecord& r2 = result.records[1];
    CHECK(r2.pre_answer == Answer::yes);
    CHECK(r2.misled);

    AttackReport report = compute_attack_report(result.records, PromptMode::base);
    CHECK(report.n_targets == 3);
    CHECK(report.n_misled == 3);
    CHECK(report.success_rate_pct == "100.00");
    CHECK(report.n_pre_no == 2);  // t1 and t3
    REQUIRE(report.flip_rate.has_value());
    CHECK(*report.flip_rate == doctest::Approx(1.0));
}

TEST_CASE("run_attack without pre-queries leaves flip rates unset") {
    Corpus c = attack_corpus();
    ScriptedProvider provider;
    provider.add_contains_rule("Voss", "Yes");
    provider.add_any_rule("No");

    AttackOptions options;
    options.query_pre = false;
    options.insert_at = 0;
    options.sleep = [](std::chrono::milliseconds) {};

    AttackRunResult result = run_attack(c, {"t1", "t2"}, kDonor, "Big Bad", provider, options);
    REQUIRE(result.records.size() == 2);
    CHECK_FALSE(result.records[0].pre_answer.has_value());
    CHECK(result.records[0].spec.insert_at == 0);
    CHECK(provider.call_count() == 2);  // post only

    AttackReport report = compute_attack_report(result.records, PromptMode::base);
    CHECK(report.n_pre_no == 0);
    CHECK_FALSE(report.flip_rate.has_value());
    CHECK_FALSE(report.flip_rate_pct.has_value());
}

TEST_CASE("run_attack supports structured reasoning prompts") {
    Corpus c = attack_corpus();
    ScriptedProvider provider;
    provider.add_contains_rule(
        "Voss", R"({"Trope": "Big Bad", "Thought": [{"Reasoning": "r", "Evidence": "e",
                    "Relevant Paragraphs": 1}], "Answer": "yes"})");
    provider.add_any_rule(R"({"Trope": "Big Bad", "Thought": [{"Reasoning": "r"}],
                              "Answer": "no"})");

    AttackOptions options;
    options.prompt_mode = PromptMode::cot;
    options.sleep = [](std::chrono::milliseconds) {};

    AttackRunResult result = run_attack(c, {"t1", "t3"}, kDonor, "Big Bad", provider, options);
    REQUIRE(result.records.size() == 2);
    CHECK(result.records[0].pre_answer == Answer::no);
    CHECK(result.records[0].misled);
    CHECK(result.records[1].misled);
}

TEST_CASE("reported two-decimal rates match integer counts out of thirty") {
    struct GridCell {
        int misled;
        const char* pct;
    };
    const GridCell cells[] = {{19, "63.33"}, {29, "96.67"}, {24, "80.00"},
                              {29, "96.67"}, {22, "73.33"}, {21, "70.00"}};
    for (const GridCell& cell : cells) {
        CAPTURE(cell.pct);
        std::vector<AttackRecord> records;
        for (int i = 0; i < 30; ++i) {
            AttackRecord r;
            r.spec = {"t" + std::to_string(i), "donor.", 0, "Some Trope"};
            r.post_answer = i < cell.misled ? Answer::yes : Answer::no;
            r.misled = i < cell.misled;
            records.push_back(r);
        }
        AttackReport report = compute_attack_report(records, PromptMode::base);
        CHECK(report.n_targets == 30);
        CHECK(report.n_misled == cell.misled);
        CHECK(report.success_rate_pct == cell.pct);
        // The printed rate is recoverable as an integer count.
        CHECK(integer_count_for_rate(report.success_rate_pct, 30) == cell.misled);
    }
    CHECK_THROWS_AS(compute_attack_report({}, PromptMode::base), ValidationError);
}

TEST_CASE("integer_count_for_rate inverts formatted percentages") {
    CHECK(integer_count_for_rate("0.00", 30) == 0);
    CHECK(integer_count_for_rate("100.00", 30) == 30);
    CHECK(integer_count_for_rate("50.00", 30) == 15);
    CHECK(integer_count_for_rate("33.40", 30) == std::nullopt);
    CHECK(integer_count_for_rate("63.33", 0) == std::nullopt);
    for (int m = 0; m <= 30; ++m) {
        std::string pct = text::format_percent(static_cast<double>(m) / 30.0);
        CHECK(integer_count_for_rate(pct, 30) == m);
    }
}

TEST_CASE("attack specs load from disk with component validation") {
    std::string dir = std::string(TROPEVAL_SOURCE_DIR) + "/assets/attacks/";
    AttackSpec blatant = load_attack_spec(dir + "blatant_lies.json");
    CHECK(blatant.components.trope == "Blatant Lies");
    CHECK(blatant.components.components.size() == 2);
    CHECK(blatant.components.removed == blatant.components.components[0]);
    CHECK(blatant.n_targets == 30);
    CHECK_FALSE(blatant.insert_at.has_value());  // midpoint
    CHECK_FALSE(blatant.donor_text.empty());
    CHECK_NOTHROW(segment_sentences(blatant.donor_text));

    AttackSpec kick = load_attack_spec(dir + "kick_the_dog.json");
    CHECK(kick.components.trope == "Kick The Dog");
    AttackSpec big_bad = load_attack_spec(dir + "big_bad.json");
    CHECK(big_bad.components.trope == "Big Bad");

    testutil::TempDir tmp;
    testutil::write_file(tmp.file("bad.json"),
                         R"({"trope": "X", "components": ["only one"], "removed": "only one",
                             "donor_text": "Donor.", "n_targets": 5})");
    CHECK_THROWS_AS(load_attack_spec(tmp.file("bad.json")), ValidationError);
    testutil::write_file(tmp.file("empty_donor.json"),
                         R"({"trope": "X", "components": ["a", "b"], "removed": "a",
                             "donor_text": "", "n_targets": 5})");
    CHECK_THROWS_AS(load_attack_spec(tmp.file("empty_donor.json")), ValidationError);
    CHECK_THROWS_AS(load_attack_spec(tmp.file("missing.json")), ValidationError);
}
