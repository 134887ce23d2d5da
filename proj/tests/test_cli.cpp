#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = TROPEVAL_CLI_PATH;
const std::string kAcceptance =
    std::string(TROPEVAL_SOURCE_DIR) + "/tests/fixtures/acceptance";

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
    static std::atomic<int> counter{0};
    int n = counter++;
    fs::path out = scratch / ("cli-out-" + std::to_string(n) + ".txt");
    fs::path err = scratch / ("cli-err-" + std::to_string(n) + ".txt");
    std::string cmd = kCli + " " + args + " > " + out.string() + " 2> " + err.string();
    int status = std::system(cmd.c_str());
    CliResult result;
    if (WIFEXITED(status)) result.code = WEXITSTATUS(status);
    result.out = testutil::read_file(out.string());
    result.err = testutil::read_file(err.string());
    return result;
}

fs::path only_run_dir(const fs::path& runs_dir) {
    fs::path found;
    int count = 0;
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
        if (entry.is_directory()) {
            found = entry.path();
            ++count;
        }
    }
    REQUIRE(count == 1);
    return found;
}

}  // namespace

TEST_CASE("cli: version and bad invocations") {
    testutil::TempDir tmp;
    CliResult version = run_cli("--version", tmp.path);
    CHECK(version.code == 0);
    CHECK(version.out.find("tropeval") != std::string::npos);
    CHECK(version.out.find("appendix-v1") != std::string::npos);

    CHECK(run_cli("no-such-command", tmp.path).code != 0);
    CHECK(run_cli("", tmp.path).code != 0);

    CliResult missing = run_cli("score " + (tmp.path / "nowhere").string(), tmp.path);
    CHECK(missing.code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("cli: validate-data and stats") {
    testutil::TempDir tmp;
    const std::string corpus = kAcceptance + "/corpus.jsonl";
    const std::string catalog = kAcceptance + "/catalog.json";

    CliResult ok = run_cli("validate-data " + corpus + " " + catalog, tmp.path);
    CHECK(ok.code == 0);
    CHECK(ok.out.find("5 synopses") != std::string::npos);
    CHECK(ok.out.find("3 tropes") != std::string::npos);

    testutil::write_file(tmp.file("broken.jsonl"), "{\"id\": \"x\", \"text\": \"A.\"}\nnot json\n");
    CliResult bad = run_cli("validate-data " + tmp.file("broken.jsonl") + " " + catalog, tmp.path);
    CHECK(bad.code == 1);
    CHECK(bad.err.find("line 2") != std::string::npos);

    CliResult stats = run_cli("stats " + corpus + " " + catalog + " --json", tmp.path);
    CHECK(stats.code == 0);
    nlohmann::json doc = nlohmann::json::parse(stats.out);
    CHECK(doc["synopses"] == 5);
    CHECK(doc["tropes"] == 3);
    CHECK(doc["words_per_plot"]["mean"].get<double>() > 0.0);
    CHECK(doc["sentences_per_plot"].contains("median"));
    CHECK(doc["tropes_per_plot"].contains("stddev"));
}

TEST_CASE("cli: run, score, report, compare, cache-info round trip") {
    testutil::TempDir tmp;
    const std::string config = kAcceptance + "/config.json";
    const std::string dirs = " --runs-dir " + (tmp.path / "runs").string() + " --cache-dir " +
                             (tmp.path / "cache").string();

    CliResult run = run_cli("run --config " + config + dirs + " --json", tmp.path);
    CAPTURE(run.err);
    REQUIRE(run.code == 0);
    nlohmann::json run_doc = nlohmann::json::parse(run.out);
    CHECK(run_doc["planned"] == 15);
    CHECK(run_doc["fetched"] == 15);
    CHECK(run_doc["status"] == "complete");
    fs::path run_dir = only_run_dir(tmp.path / "runs");
    CHECK(fs::exists(run_dir / "items.jsonl"));

    // Second invocation replays the ledger without refetching.
    CliResult rerun = run_cli("run --config " + config + dirs + " --json", tmp.path);
    REQUIRE(rerun.code == 0);
    nlohmann::json rerun_doc = nlohmann::json::parse(rerun.out);
    CHECK(rerun_doc["skipped"] == 15);
    CHECK(rerun_doc["fetched"] == 0);

    CliResult score = run_cli("score " + run_dir.string() + " --json", tmp.path);
    REQUIRE(score.code == 0);  // complete run, no exclusions
    nlohmann::json score_doc = nlohmann::json::parse(score.out);
    CHECK(score_doc["micro"]["precision_pct"] == "66.67");
    CHECK(score_doc["micro"]["recall_pct"] == "50.00");
    CHECK(score_doc["micro"]["f1_pct"] == "57.14");
    CHECK(score_doc["partial"] == false);
    CHECK(fs::exists(run_dir / "metrics.json"));

    CliResult csv = run_cli("report " + run_dir.string() + " --format csv", tmp.path);
    CHECK(csv.code == 0);
    CHECK(csv.out.rfind("trope,tp,fp,fn,tn,", 0) == 0);
    CHECK(csv.out.find("Downer Ending,") != std::string::npos);

    CliResult report = run_cli("report " + run_dir.string() + " --bin-width 1000", tmp.path);
    CHECK(report.code == 0);
    nlohmann::json report_doc = nlohmann::json::parse(report.out);
    CHECK(report_doc.contains("easiest"));
    CHECK(report_doc.contains("hardest"));
    CHECK(report_doc.contains("length_bins"));

    CliResult compare =
        run_cli("compare " + run_dir.string() + " " + run_dir.string() + " --json", tmp.path);
    CHECK(compare.code == 0);
    nlohmann::json compare_doc = nlohmann::json::parse(compare.out);
    CHECK(compare_doc["delta"]["f1"].get<double>() == 0.0);

    CliResult cache = run_cli("cache-info " + (tmp.path / "cache").string() + " --json", tmp.path);
    CHECK(cache.code == 0);
    nlohmann::json cache_doc = nlohmann::json::parse(cache.out);
    CHECK(cache_doc["entries"] == 15);
}

TEST_CASE("cli: interrupted runs score as partial and resume to completion") {
    testutil::TempDir tmp;
    const std::string config = kAcceptance + "/config.json";
    const std::string dirs = " --runs-dir " + (tmp.path / "runs").string() + " --cache-dir " +
                             (tmp.path / "cache").string();

    CliResult run = run_cli("run --config " + config + dirs + " --stop-after 4 --json", tmp.path);
    REQUIRE(run.code == 0);
    CHECK(nlohmann::json::parse(run.out)["status"] == "partial");
    fs::path run_dir = only_run_dir(tmp.path / "runs");

    CliResult partial_score = run_cli("score " + run_dir.string(), tmp.path);
    CHECK(partial_score.code == 2);  // scoreable, but flagged partial
    CHECK(partial_score.out.find("PARTIAL") != std::string::npos);

    CliResult resume = run_cli("resume " + run_dir.string() + " --cache-dir " +
                                   (tmp.path / "cache").string() + " --json",
                               tmp.path);
    REQUIRE(resume.code == 0);
    nlohmann::json resume_doc = nlohmann::json::parse(resume.out);
    CHECK(resume_doc["skipped"] == 4);
    CHECK(resume_doc["fetched"] == 11);
    CHECK(resume_doc["status"] == "complete");

    CHECK(run_cli("score " + run_dir.string(), tmp.path).code == 0);
}

TEST_CASE("cli: live http providers require explicit opt-in") {
    testutil::TempDir tmp;
    nlohmann::json config = {
        {"model", "remote-model"},
        {"provider",
         {{"kind", "http"},
          {"base_url", "https://example.invalid/v1"},
          {"auth_env", "NO_SUCH_KEY"}}},
        {"corpus_path", kAcceptance + "/corpus.jsonl"},
        {"catalog_path", kAcceptance + "/catalog.json"},
    };
    testutil::write_file(tmp.file("live.json"), config.dump());
    CliResult refused = run_cli("run --config " + tmp.file("live.json") + " --runs-dir " +
                                    (tmp.path / "runs").string() + " --cache-dir " +
                                    (tmp.path / "cache").string(),
                                tmp.path);
    CHECK(refused.code == 1);
    CHECK(refused.err.find("--live") != std::string::npos);
}

TEST_CASE("cli: scripted injection attack reports exact percentages") {
    testutil::TempDir tmp;
    nlohmann::json spec = {
        {"trope", "Big Bad"},
        {"components", {"bad character", "drive the story forward"}},
        {"removed", "drive the story forward"},
        {"donor_text", "Voss arrives with a ledger. Voss demands the deed."},
        {"n_targets", 2},
        {"seed", 1},
        {"insert_at", "midpoint"},
    };
    testutil::write_file(tmp.file("spec.json"), spec.dump());
    nlohmann::json fixture = {
        {"rules", nlohmann::json::array({{{"match", {{"any", true}}}, {"content", "No."}}})}};
    testutil::write_file(tmp.file("fixture.json"), fixture.dump());

    const std::string common = " --spec " + tmp.file("spec.json") + " --corpus " + kAcceptance +
                               "/corpus.jsonl --catalog " + kAcceptance + "/catalog.json";
    CliResult attack =
        run_cli("attack" + common + " --fixture " + tmp.file("fixture.json") + " --json", tmp.path);
    CAPTURE(attack.err);
    REQUIRE(attack.code == 0);
    nlohmann::json doc = nlohmann::json::parse(attack.out);
    CHECK(doc["n_targets"] == 2);
    CHECK(doc["n_misled"] == 0);
    CHECK(doc["success_rate_pct"] == "0.00");
    CHECK(doc["n_pre_no"] == 2);
    CHECK(doc["flip_rate_pct"] == "0.00");

    // Exactly one provider source must be chosen.
    CliResult ambiguous = run_cli(
        "attack" + common + " --fixture " + tmp.file("fixture.json") + " --random-p 0.5", tmp.path);
    CHECK(ambiguous.code == 1);
    CliResult none = run_cli("attack" + common, tmp.path);
    CHECK(none.code == 1);
}
