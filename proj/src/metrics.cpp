#include "tropeval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tropeval/rng.hpp"

namespace tropeval {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    tn += other.tn;
    return *this;
}

ScoredRun ScoredRun::full_product(std::vector<std::string> synopsis_ids,
                                  std::vector<std::string> tropes, std::set<Pair> gold,
                                  std::set<Pair> predicted) {
    ScoredRun run;
    run.synopsis_ids = std::move(synopsis_ids);
    run.tropes = std::move(tropes);
    run.gold = std::move(gold);
    run.predicted = std::move(predicted);
    for (const auto& sid : run.synopsis_ids) {
        for (const auto& trope : run.tropes) run.universe.insert({sid, trope});
    }
    return run;
}

ConfusionCounts confusion(const std::set<Pair>& gold, const std::set<Pair>& predicted,
                          const std::set<Pair>& universe) {
    for (const auto& p : gold) {
        if (!universe.count(p)) {
            throw ValidationError("gold pair outside universe: (" + p.synopsis_id + ", " +
                                  p.trope + ")");
        }
    }
    for (const auto& p : predicted) {
        if (!universe.count(p)) {
            throw ValidationError("predicted pair outside universe: (" + p.synopsis_id + ", " +
                                  p.trope + ")");
        }
    }
    ConfusionCounts c;
    for (const auto& p : universe) {
        bool in_gold = gold.count(p) > 0;
        bool in_pred = predicted.count(p) > 0;
        if (in_gold && in_pred) {
            ++c.tp;
        } else if (!in_gold && in_pred) {
            ++c.fp;
        } else if (in_gold) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

PRF prf(const ConfusionCounts& counts) {
    PRF out;
    if (counts.tp + counts.fp > 0) {
        out.precision = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp);
    }
    if (counts.tp + counts.fn > 0) {
        out.recall = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
    }
    if (out.precision + out.recall > 0) {
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    }
    return out;
}

PRF micro_prf(const ScoredRun& run) {
    if (run.universe.empty()) throw ValidationError("cannot score an empty universe");
    return prf(confusion(run.gold, run.predicted, run.universe));
}

PerTropeReport per_trope_prf(const ScoredRun& run) {
    if (run.universe.empty()) throw ValidationError("cannot score an empty universe");
    PerTropeReport report;
    for (const auto& trope : run.tropes) report.by_trope[trope] = TropeScore{};

    std::map<std::string, std::set<Pair>> universe_by, gold_by, pred_by;
    for (const auto& p : run.universe) universe_by[p.trope].insert(p);
    for (const auto& p : run.gold) gold_by[p.trope].insert(p);
    for (const auto& p : run.predicted) pred_by[p.trope].insert(p);

    for (auto& [trope, score] : report.by_trope) {
        const auto& cells = universe_by[trope];
        score.counts = confusion(gold_by[trope], pred_by[trope], cells);
        score.prf = prf(score.counts);
        score.support = score.counts.tp + score.counts.fn;
        if (!cells.empty()) {
            score.yes_rate = static_cast<double>(score.counts.tp + score.counts.fp) /
                             static_cast<double>(cells.size());
        }
    }
    return report;
}

PRF macro_average(const PerTropeReport& report) {
    PRF out;
    if (report.by_trope.empty()) return out;
    for (const auto& [trope, score] : report.by_trope) {
        out.precision += score.prf.precision;
        out.recall += score.prf.recall;
        out.f1 += score.prf.f1;
    }
    const double n = static_cast<double>(report.by_trope.size());
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
    return out;
}

RankedTropes rank_tropes(const PerTropeReport& report, int k) {
    if (k < 0 || static_cast<std::size_t>(k) > report.by_trope.size()) {
        throw std::invalid_argument("k must be in [0, number of tropes]");
    }
    std::vector<std::pair<std::string, double>> by_f1;
    by_f1.reserve(report.by_trope.size());
    for (const auto& [trope, score] : report.by_trope) by_f1.emplace_back(trope, score.prf.f1);

    RankedTropes ranked;
    std::stable_sort(by_f1.begin(), by_f1.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    ranked.easiest.assign(by_f1.begin(), by_f1.begin() + k);
    std::stable_sort(by_f1.begin(), by_f1.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    ranked.hardest.assign(by_f1.begin(), by_f1.begin() + k);
    return ranked;
}

YesRateTable yes_rate_distribution(const std::vector<ScoredRun>& runs) {
    if (runs.empty()) throw ValidationError("no runs given");
    std::set<std::string> base(runs.front().tropes.begin(), runs.front().tropes.end());
    for (const auto& run : runs) {
        std::set<std::string> here(run.tropes.begin(), run.tropes.end());
        if (here != base) throw ValidationError("runs do not share a trope set");
    }

    YesRateTable table;
    table.tropes.assign(base.begin(), base.end());
    for (const auto& run : runs) {
        PerTropeReport report = per_trope_prf(run);
        std::vector<double> rates;
        rates.reserve(table.tropes.size());
        for (const auto& trope : table.tropes) rates.push_back(report.by_trope.at(trope).yes_rate);
        table.per_run.push_back(std::move(rates));
    }
    return table;
}

LengthBinReport length_accuracy(const ScoredRun& run, int bin_width) {
    if (bin_width <= 0) throw std::invalid_argument("bin_width must be positive");
    LengthBinReport report;
    report.bin_width = bin_width;

    std::map<int, LengthBin> bins;
    for (const auto& p : run.universe) {
        auto it = run.synopsis_chars.find(p.synopsis_id);
        if (it == run.synopsis_chars.end()) {
            throw ValidationError("no character length recorded for synopsis " + p.synopsis_id);
        }
        int idx = it->second / bin_width;
        LengthBin& bin = bins[idx];
        bin.lo = idx * bin_width;
        bin.hi = (idx + 1) * bin_width;
        ++bin.total;
        bool in_gold = run.gold.count(p) > 0;
        bool in_pred = run.predicted.count(p) > 0;
        if (in_gold == in_pred) ++bin.correct;
    }
    for (auto& [idx, bin] : bins) {
        bin.accuracy = bin.total > 0
                           ? static_cast<double>(bin.correct) / static_cast<double>(bin.total)
                           : 0.0;
        report.bins.push_back(bin);
    }
    return report;
}

AuditSheet sample_audit(const ScoredRun& run, const std::map<Pair, CoTPrediction>& cot,
                        const Corpus& corpus, int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("n must be non-negative");
    std::vector<Pair> tp_cases;
    for (const auto& p : run.gold) {
        if (run.predicted.count(p) && cot.count(p)) tp_cases.push_back(p);
    }
    if (static_cast<int>(tp_cases.size()) < n) {
        throw ValidationError("only " + std::to_string(tp_cases.size()) +
                              " true positives with reasoning structure; need " +
                              std::to_string(n));
    }

    DeterministicRng rng(seed);
    std::vector<std::size_t> picks = rng.sample_indices(tp_cases.size(), n);
    std::sort(picks.begin(), picks.end());  // stable sheet order

    AuditSheet sheet;
    sheet.seed = seed;
    for (std::size_t idx : picks) {
        const Pair& pair = tp_cases[idx];
        const CoTPrediction& pred = cot.at(pair);
        AuditCase entry;
        entry.synopsis_id = pair.synopsis_id;
        entry.trope = pair.trope;
        entry.raw = pred.raw;
        entry.thoughts = pred.thoughts;

        const Synopsis* synopsis = corpus.find(pair.synopsis_id);
        if (synopsis) {
            std::set<int> seen;
            for (const auto& thought : pred.thoughts) {
                for (int ref : thought.relevant_paragraphs) {
                    if (ref >= 0 && ref < static_cast<int>(synopsis->sentences.size()) &&
                        seen.insert(ref).second) {
                        entry.cited_sentences.emplace_back(ref, synopsis->sentences[ref].text);
                    }
                }
            }
            std::sort(entry.cited_sentences.begin(), entry.cited_sentences.end());
        }
        sheet.cases.push_back(std::move(entry));
    }
    return sheet;
}

std::vector<TropeGap> diff_runs(const ScoredRun& run_a, const ScoredRun& run_b) {
    std::set<std::string> tropes_a(run_a.tropes.begin(), run_a.tropes.end());
    std::set<std::string> tropes_b(run_b.tropes.begin(), run_b.tropes.end());
    if (tropes_a != tropes_b) throw ValidationError("runs do not share a trope set");

    PerTropeReport report_a = per_trope_prf(run_a);
    PerTropeReport report_b = per_trope_prf(run_b);
    std::vector<TropeGap> gaps;
    for (const auto& trope : tropes_a) {
        TropeGap gap;
        gap.trope = trope;
        gap.f1_a = report_a.by_trope.at(trope).prf.f1;
        gap.f1_b = report_b.by_trope.at(trope).prf.f1;
        gap.gap = gap.f1_a - gap.f1_b;
        gaps.push_back(gap);
    }
    std::sort(gaps.begin(), gaps.end(), [](const TropeGap& a, const TropeGap& b) {
        if (std::fabs(a.gap) != std::fabs(b.gap)) return std::fabs(a.gap) > std::fabs(b.gap);
        return a.trope < b.trope;
    });
    return gaps;
}

}  // namespace tropeval
