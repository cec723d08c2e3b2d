// Acceptance report: one verdict line per criterion, details indented below.
//
// Medians, rank correlations and inversion counts are recomputed here from
// the raw per-run records rather than taken from the library's summaries.
//
// Usage: kkps_acceptance [--expect-fail 1,2,...]
// Exit status is 0 when every criterion passes, or, with --expect-fail, when
// exactly the listed criteria fail.

#include "kkps/analysis.hpp"
#include "kkps/engine.hpp"
#include "kkps/experiments.hpp"
#include "kkps/io.hpp"
#include "kkps/world.hpp"

#include "oracles.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

using namespace kkps;

namespace {

// ---- tolerances -------------------------------------------------------------

constexpr std::size_t seeds_per_cell = 10;
constexpr double min_exponent = 1.5;             // criterion 1
constexpr std::int64_t max_inversions = 1;       // criteria 2 and 4
constexpr std::int64_t max_inversions_strict = 0; // criteria 5 and 6, "non-decreasing"
constexpr double min_early_share = 0.8;          // criterion 7
constexpr std::int64_t early_by_iteration = 3;   // criterion 7
constexpr int oracle_instances = 150;            // criterion 8, at least 100
constexpr std::int64_t tiny_m = 5, tiny_n = 10, tiny_k = 3, tiny_a = 4, tiny_b = 2;
constexpr double fit_target = 2.5;               // criterion 9
constexpr double fit_tolerance = 0.1;
constexpr std::size_t fit_samples = 100000;

// ---- test-side statistics ---------------------------------------------------

double median(std::vector<double> v)
{
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<double> ranks(const std::vector<double>& v)
{
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double below = 0, equal = 0;
        for (double w : v) {
            below += w < v[i];
            equal += w == v[i];
        }
        r[i] = below + (equal + 1) / 2;
    }
    return r;
}

double rank_correlation(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i] / n;
        my += ry[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// Adjacent pairs moving against `sign`.
std::int64_t inversions(const std::vector<double>& y, int sign)
{
    std::int64_t count = 0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) count += sign * (y[i + 1] - y[i]) < 0;
    return count;
}

bool monotone(const std::vector<double>& x, const std::vector<double>& y, int sign, std::int64_t allowed)
{
    for (double v : y) {
        if (!std::isfinite(v)) return false;
    }
    return sign * rank_correlation(x, y) > 0 && inversions(y, sign) <= allowed;
}

std::string join(const std::vector<double>& v, const char* format = "{:.4f}")
{
    std::string out;
    for (double x : v) out += (out.empty() ? "" : " ") + fmt::format(fmt::runtime(format), x);
    return out;
}

// ---- sweep access -----------------------------------------------------------

std::string assignment(const Cell& cell, const std::string& param)
{
    for (const auto& [name, value] : cell.assignments) {
        if (name == param) return value;
    }
    return {};
}

struct Selector {
    std::map<std::string, std::string> fixed;
    bool matches(const Cell& cell) const
    {
        for (const auto& [param, value] : fixed) {
            if (assignment(cell, param) != value) return false;
        }
        return true;
    }
};

std::vector<const RunRecord*> runs_of(const SweepResult& r, const Selector& sel)
{
    std::vector<const RunRecord*> out;
    for (const RunRecord& rec : r.records) {
        if (sel.matches(r.cells[rec.cell])) out.push_back(&rec);
    }
    return out;
}

template <class F>
double median_of(const std::vector<const RunRecord*>& runs, F metric)
{
    std::vector<double> v;
    for (const RunRecord* rec : runs) {
        if (!rec->ok()) continue;
        if (auto x = metric(*rec)) v.push_back(*x);
    }
    return median(v);
}

std::optional<double> mle_goodness(const RunRecord& r)
{
    return r.mle ? std::optional(r.mle->goodness) : std::nullopt;
}
std::optional<double> mle_exponent(const RunRecord& r)
{
    return r.mle ? std::optional(r.mle->exponent) : std::nullopt;
}
std::optional<double> final_efficiency(const RunRecord& r)
{
    return r.trajectory.records.empty() ? std::nullopt : std::optional(r.trajectory.records.back().efficiency);
}

// Share of the first-to-last efficiency gain present after `by` iterations.
double early_share(const Trajectory& t, std::int64_t by)
{
    if (t.records.empty()) return 1.0;
    const double first = t.records.front().efficiency, last = t.records.back().efficiency;
    if (last - first <= 1e-12) return 1.0;
    const std::size_t at = std::min<std::size_t>(t.records.size(), static_cast<std::size_t>(by));
    return (t.records[at - 1].efficiency - first) / (last - first);
}

// ---- reporting --------------------------------------------------------------

struct Verdict {
    int id;
    std::string title;
    bool pass = true;
    std::vector<std::string> details;

    void require(bool ok, std::string line)
    {
        pass = pass && ok;
        details.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", line));
    }
    void note(std::string line) { details.push_back("info " + std::move(line)); }
};

void print(const Verdict& v)
{
    std::printf("[%s] criterion %d: %s\n", v.pass ? "PASS" : "FAIL", v.id, v.title.c_str());
    for (const auto& d : v.details) std::printf("         %s\n", d.c_str());
    std::fflush(stdout);
}

const std::vector<std::string> inits = {"uniform", "poisson", "normal"};
const std::vector<double> b_values = {1, 3, 5, 10, 20};

// ---- criteria ---------------------------------------------------------------

Verdict criterion_1(const SweepResult& fig2)
{
    Verdict v{1, "power-law emergence beats exponential-tail controls, exponent > 1.5"};
    for (const auto& init : inits) {
        auto runs = runs_of(fig2, {{{"k", "80"}, {"a", "1"}, {"init_dist", init}}});
        std::vector<double> control;
        for (const RunRecord* rec : runs) {
            // geometric control with the size and mean of the positive degrees
            std::size_t size = 0;
            double sum = 0;
            for (auto [degree, count] : rec->histogram.counts) {
                if (degree < 1) continue;
                size += static_cast<std::size_t>(count);
                sum += static_cast<double>(degree * count);
            }
            std::mt19937_64 gen(rec->seed * 7919 + 17);
            auto sample = oracle::geometric_sample(size, sum / static_cast<double>(size), gen);
            control.push_back(fit_power_law(histogram_of(sample), FitMethod::mle).goodness);
        }
        const double good = median_of(runs, mle_goodness);
        const double ctrl = median(control);
        const double expo = median_of(runs, mle_exponent);
        v.require(good >= ctrl && expo > min_exponent,
                  fmt::format("init={}: median goodness {:.4f} vs control {:.4f}, median exponent {:.3f} ({} runs)",
                              init, good, ctrl, expo, runs.size()));
    }
    return v;
}

Verdict criterion_2(const SweepResult& fig2, const SweepResult& fig3)
{
    Verdict v{2, "power-law goodness non-increasing in b (a=b and a=20)"};
    for (const auto& [name, result] : {std::pair{"a=b", &fig2}, std::pair{"a=20", &fig3}}) {
        for (const auto& init : inits) {
            for (const char* k : {"80", "120"}) {
                std::vector<double> med;
                for (double b : b_values) {
                    const auto bs = fmt::format("{}", b);
                    med.push_back(median_of(runs_of(*result, {{{"k", k}, {"b", bs}, {"init_dist", init}}}),
                                            mle_goodness));
                }
                const bool ok = monotone(b_values, med, -1, max_inversions);
                const auto line = fmt::format("{} k={} init={}: medians [{}] rho {:.3f} inversions {}", name, k, init,
                                              join(med), rank_correlation(b_values, med), inversions(med, -1));
                // goodness panels use k=80; k=120 is shown for reference
                if (std::string(k) == "80") v.require(ok, line);
                else v.note(line);
            }
        }
    }
    return v;
}

Verdict criterion_3(const SweepResult& fig2, const SweepResult& fig3)
{
    Verdict v{3, "exponent curve for k=120 below or decaying faster than for k=80"};
    for (const auto& [name, result] : {std::pair{"a=b", &fig2}, std::pair{"a=20", &fig3}}) {
        for (const auto& init : inits) {
            std::vector<double> diffs;
            for (double b : b_values) {
                const auto bs = fmt::format("{}", b);
                const double hi = median_of(runs_of(*result, {{{"k", "120"}, {"b", bs}, {"init_dist", init}}}), mle_exponent);
                const double lo = median_of(runs_of(*result, {{{"k", "80"}, {"b", bs}, {"init_dist", init}}}), mle_exponent);
                diffs.push_back(hi - lo);
            }
            const bool below = std::all_of(diffs.begin(), diffs.end(), [](double d) { return d < 0; });
            const double rho = rank_correlation(b_values, diffs);
            v.require(below || rho < 0,
                      fmt::format("{} init={}: exponent(k=120) - exponent(k=80) per b [{}], all below: {}, rho {:.3f}",
                                  name, init, join(diffs, "{:+.3f}"), below ? "yes" : "no", rho));
        }
    }
    return v;
}

std::vector<double> efficiency_curve(const SweepResult& r, const std::string& param, const std::vector<double>& values)
{
    std::vector<double> med;
    for (double x : values) med.push_back(median_of(runs_of(r, {{{param, fmt::format("{}", x)}}}), final_efficiency));
    return med;
}

Verdict criterion_4(const SweepResult& fig4)
{
    Verdict v{4, "efficiency increases with a, with diminishing gains"};
    const std::vector<double> as = {2, 4, 6, 8, 20};
    const auto med = efficiency_curve(fig4, "a", as);
    v.require(monotone(as, med, 1, max_inversions),
              fmt::format("medians over a {{2,4,6,8,20}}: [{}] rho {:.3f} inversions {}", join(med),
                          rank_correlation(as, med), inversions(med, 1)));
    const double early = med[1] - med[0], late = med[4] - med[3];
    v.require(late < early, fmt::format("gain a 8->20 {:.4f} < gain a 2->4 {:.4f}", late, early));
    return v;
}

Verdict criterion_5(const SweepResult& fig6, const SweepResult& fig5)
{
    Verdict v{5, "efficiency non-decreasing in k (a=8, b=2)"};
    const std::vector<double> ks = {20, 80, 160};
    const auto med = efficiency_curve(fig6, "k", ks);
    v.require(monotone(ks, med, 1, max_inversions_strict),
              fmt::format("medians over k {{20,80,160}}: [{}] rho {:.3f} inversions {}", join(med),
                          rank_correlation(ks, med), inversions(med, 1)));
    const std::vector<double> ks5 = {30, 60, 90, 120};
    const auto med5 = efficiency_curve(fig5, "k", ks5);
    v.note(fmt::format("a=b=1 grid, reported only: medians over k {{30,60,90,120}}: [{}] rho {:.3f}", join(med5),
                       rank_correlation(ks5, med5)));
    return v;
}

Verdict criterion_6(const SweepResult& fig7)
{
    Verdict v{6, "efficiency non-decreasing in b (a=8, k=160)"};
    const std::vector<double> bs = {2, 4, 6, 8};
    const auto med = efficiency_curve(fig7, "b", bs);
    v.require(monotone(bs, med, 1, max_inversions_strict),
              fmt::format("medians over b {{2,4,6,8}}: [{}] rho {:.3f} inversions {}", join(med),
                          rank_correlation(bs, med), inversions(med, 1)));
    return v;
}

Verdict criterion_7(const std::map<std::string, SweepResult>& all)
{
    Verdict v{7, "most efficiency gain within the first 3 iterations in every preset cell"};
    for (const auto& [name, result] : all) {
        double worst = 2.0;
        std::string worst_cell;
        std::size_t cells = 0;
        bool ok = true;
        for (const Cell& cell : result.cells) {
            std::vector<double> shares;
            for (const RunRecord& rec : result.records) {
                if (rec.cell == cell.index && rec.ok()) shares.push_back(early_share(rec.trajectory, early_by_iteration));
            }
            const double m = median(shares);
            ++cells;
            ok = ok && m >= min_early_share;
            if (!(m >= worst)) {
                worst = m;
                worst_cell = cell.label;
            }
        }
        v.require(ok, fmt::format("{}: {} cells, lowest median share {:.4f} ({})", name, cells, worst, worst_cell));
    }
    return v;
}

Verdict criterion_8()
{
    Verdict v{8, "engine equals the reference loop; total utility equals exhaustive search"};
    int compared = 0, equal = 0, tu_equal = 0;
    std::string first_mismatch;
    for (int inst = 1; inst <= oracle_instances; ++inst) {
        std::mt19937_64 gen(static_cast<std::uint64_t>(inst) * 2654435761u);
        auto pick = [&](std::int64_t lo, std::int64_t hi) {
            return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen);
        };
        ModelParams p;
        p.k = pick(1, tiny_k);
        p.m = pick(p.k, tiny_m);
        p.n = pick(p.m, tiny_n);
        p.a = pick(1, std::min(tiny_a, p.n));
        p.b = pick(1, std::min(tiny_b, p.a));
        p.seed = static_cast<std::uint64_t>(inst);
        p.max_iterations = 20;
        p.init_dist = parse_init_dist(inst % 3 == 0 ? "uniform" : inst % 3 == 1 ? "poisson" : "normal");

        CheckedParams c = validate_params(p);
        TopicWorld w = generate_world(c);
        Engine e(w, c);
        WwwState s = e.initial_state();
        const auto ref = oracle::reference_run(w.document_matrix(), w.user_matrix(), p, s.pseudo_scores(), false);

        const RunResult run = e.run(s);
        bool same = run.trajectory.records.size() == ref.size();
        for (std::size_t r = 0; same && r < ref.size(); ++r) {
            s = e.step(s).state;
            std::set<std::pair<std::size_t, std::size_t>> got;
            for (auto [u, d] : s.links()) got.insert({u, d});
            const IterationRecord& rec = run.trajectory.records[r];
            same = got == ref[r].links && rec.new_links == static_cast<std::int64_t>(ref[r].new_links) &&
                   std::abs(rec.attained_utility - ref[r].attained) <= 1e-9 * std::max(1.0, ref[r].attained);
        }
        ++compared;
        equal += same;
        if (!same && first_mismatch.empty()) first_mismatch = fmt::format("instance {}", inst);

        const double tu = max_total_utility(w, p.b);
        const double brute = oracle::exhaustive_total_utility(w.document_matrix(), w.user_matrix(), p.b);
        tu_equal += std::abs(tu - brute) <= 1e-12 * std::max(1.0, brute);
    }
    v.require(equal == compared && compared >= 100,
              fmt::format("link-set trajectories equal on {}/{} instances (m<={}, n<={}, k<={}, a<={}, b<={}){}",
                          equal, compared, tiny_m, tiny_n, tiny_k, tiny_a, tiny_b,
                          first_mismatch.empty() ? "" : ", first mismatch " + first_mismatch));
    v.require(tu_equal == compared, fmt::format("total utility equal on {}/{} instances", tu_equal, compared));
    return v;
}

std::string serialize_run(const ModelParams& p)
{
    CheckedParams c = validate_params(p);
    TopicWorld w = generate_world(c);
    RunResult r = Engine(w, c).run();
    std::ostringstream os;
    write_trajectory_csv(os, r.trajectory);
    write_edge_list(os, r.state);
    write_histogram_csv(os, indegree_histogram(r.state));
    os << world_to_json(w).dump();
    return os.str();
}

Verdict criterion_9(const std::map<std::string, SweepResult>& all)
{
    Verdict v{9, "invariants, determinism and fitter recovery"};

    // link cap, efficiency range and degree identity over every preset run
    std::size_t runs = 0, cap_ok = 0, eff_ok = 0, degree_ok = 0;
    for (const auto& [name, result] : all) {
        for (const RunRecord& rec : result.records) {
            if (!rec.ok()) continue;
            const ModelParams p = cell_params(result.config, result.cells[rec.cell], rec.seed);
            const auto cap = p.m * std::lround(static_cast<double>(p.n) / static_cast<double>(p.k));
            ++runs;
            bool cap_fine = true, eff_fine = true;
            for (const auto& r : rec.trajectory.records) {
                cap_fine = cap_fine && r.cumulative_links <= cap;
                eff_fine = eff_fine && r.efficiency >= 0.0 && r.efficiency <= 1.0;
            }
            cap_ok += cap_fine;
            eff_ok += eff_fine;
            std::int64_t total = 0, docs = 0;
            for (auto [degree, count] : rec.histogram.counts) {
                total += degree * count;
                docs += count;
            }
            const auto links = rec.trajectory.records.empty() ? 0 : rec.trajectory.records.back().cumulative_links;
            degree_ok += total == links && docs == p.n;
        }
    }
    v.require(cap_ok == runs, fmt::format("|L| <= m*round(n/k) in {}/{} runs", cap_ok, runs));
    v.require(eff_ok == runs, fmt::format("efficiency in [0,1] at every iteration in {}/{} runs", eff_ok, runs));
    v.require(degree_ok == runs, fmt::format("total in-degree = |L| in {}/{} runs", degree_ok, runs));

    // nonzero utilities of every preset shape plus random shapes
    std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> shapes;
    for (const auto& [name, result] : all) {
        for (const Cell& cell : result.cells) {
            ModelParams p = cell_params(result.config, cell, 1);
            shapes.insert({p.k, p.m, p.n});
        }
    }
    std::mt19937_64 gen(99);
    for (int i = 0; i < 30; ++i) {
        const auto k = std::uniform_int_distribution<std::int64_t>(1, 50)(gen);
        const auto m = std::uniform_int_distribution<std::int64_t>(k, 300)(gen);
        const auto n = std::uniform_int_distribution<std::int64_t>(m, 900)(gen);
        shapes.insert({k, m, n});
    }
    std::size_t nzu_ok = 0;
    for (auto [k, m, n] : shapes) {
        ModelParams p;
        p.k = k;
        p.m = m;
        p.n = n;
        const auto nzu = generate_world(validate_params(p)).utility_matrix().count_nonzero();
        nzu_ok += static_cast<std::int64_t>(nzu) == m * std::lround(static_cast<double>(n) / static_cast<double>(k));
    }
    v.require(nzu_ok == shapes.size(), fmt::format("NZU = m*round(n/k) for {}/{} shapes", nzu_ok, shapes.size()));

    // byte-identical outputs for the same seed
    bool same = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        ModelParams p;
        p.seed = seed;
        p.a = 8;
        p.b = 2;
        same = same && serialize_run(p) == serialize_run(p);
    }
    v.require(same, "two runs with the same seed give byte-identical trajectory, links, histogram and world");

    // fitter on an inverse-CDF power-law sample
    oracle::PowerLawSampler sampler(fit_target, 1);
    std::mt19937_64 sgen(2024);
    std::vector<std::int64_t> xs(fit_samples);
    for (auto& x : xs) x = sampler(sgen);
    const PowerLawFit fit = fit_power_law(histogram_of(xs), FitMethod::mle);
    v.require(std::abs(fit.exponent - fit_target) <= fit_tolerance,
              fmt::format("mle exponent {:.4f} on {} samples of exponent {} (tolerance {})", fit.exponent, fit_samples,
                          fit_target, fit_tolerance));

    // timing of one default-size run
    const auto t0 = std::chrono::steady_clock::now();
    ModelParams base;
    run_single(base);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.note(fmt::format("single run m=750 n=1500: {:.3f} s", secs));
    return v;
}

std::set<int> parse_expected(int argc, char** argv)
{
    std::set<int> out;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) != "--expect-fail") continue;
        std::string list = argv[i + 1];
        std::size_t pos = 0;
        while (pos < list.size()) {
            std::size_t comma = list.find(',', pos);
            out.insert(std::stoi(list.substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    const std::set<int> expected_fail = parse_expected(argc, argv);

    std::map<std::string, SweepResult> all;
    for (const auto& name : preset_names()) {
        SweepConfig cfg = preset(name);
        if (cfg.effective_seeds().size() != seeds_per_cell) {
            std::printf("preset %s does not use %zu seeds\n", name.c_str(), seeds_per_cell);
            return 2;
        }
        all.emplace(name, run_sweep(cfg));
    }

    std::vector<Verdict> verdicts;
    verdicts.push_back(criterion_1(all.at("fig2")));
    verdicts.push_back(criterion_2(all.at("fig2"), all.at("fig3")));
    verdicts.push_back(criterion_3(all.at("fig2"), all.at("fig3")));
    verdicts.push_back(criterion_4(all.at("fig4")));
    verdicts.push_back(criterion_5(all.at("fig6"), all.at("fig5")));
    verdicts.push_back(criterion_6(all.at("fig7")));
    verdicts.push_back(criterion_7(all));
    verdicts.push_back(criterion_8());
    verdicts.push_back(criterion_9(all));

    std::set<int> failed;
    for (const Verdict& v : verdicts) {
        print(v);
        if (!v.pass) failed.insert(v.id);
    }
    std::printf("\n%zu of %zu criteria pass\n", verdicts.size() - failed.size(), verdicts.size());
    if (!expected_fail.empty()) {
        std::string listed;
        for (int id : expected_fail) listed += (listed.empty() ? "" : ",") + std::to_string(id);
        std::printf("failures expected for criteria %s: %s\n", listed.c_str(),
                    failed == expected_fail ? "matches" : "DOES NOT MATCH");
        return failed == expected_fail ? 0 : 1;
    }
    return failed.empty() ? 0 : 1;
}
