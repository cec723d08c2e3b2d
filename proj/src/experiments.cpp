#include "kkps/experiments.hpp"

#include "kkps/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <thread>

namespace kkps {

std::vector<std::uint64_t> SweepConfig::effective_seeds() const
{
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (std::int64_t r = 0; r < replicates; ++r) out.push_back(base.seed + static_cast<std::uint64_t>(r));
    return out;
}

std::vector<Cell> enumerate_cells(const SweepConfig& cfg)
{
    for (const Axis& axis : cfg.axes) {
        if (axis.params.empty() || axis.values.empty())
            throw Error("sweep axis needs at least one parameter and one value");
        for (const auto& name : axis.params) {
            if (std::find(param_names().begin(), param_names().end(), name) == param_names().end())
                throw UnknownKey(fmt::format("unknown sweep parameter '{}'", name));
        }
    }

    std::vector<Cell> cells;
    std::vector<std::size_t> pos(cfg.axes.size(), 0);
    while (true) {
        Cell cell;
        cell.index = cells.size();
        for (std::size_t a = 0; a < cfg.axes.size(); ++a) {
            const Axis& axis = cfg.axes[a];
            for (const auto& name : axis.params) cell.assignments.emplace_back(name, axis.values[pos[a]]);
            if (!cell.label.empty()) cell.label += ' ';
            std::string joined;
            for (const auto& name : axis.params) joined += (joined.empty() ? "" : "=") + name;
            cell.label += fmt::format("{}={}", joined, axis.values[pos[a]]);
        }
        cells.push_back(std::move(cell));

        // odometer increment, last axis fastest
        std::size_t a = cfg.axes.size();
        while (a > 0) {
            --a;
            if (++pos[a] < cfg.axes[a].values.size()) break;
            pos[a] = 0;
            if (a == 0) return cells;
        }
        if (cfg.axes.empty()) return cells;
    }
}

ModelParams cell_params(const SweepConfig& cfg, const Cell& cell, std::uint64_t seed)
{
    ModelParams p = cfg.base;
    for (const auto& [name, value] : cell.assignments) set_param(p, name, value);
    p.seed = seed;
    return p;
}

RunRecord analyse_run(const RunResult& run, bool capacity_warning)
{
    RunRecord rec;
    rec.capacity_warning = capacity_warning;
    rec.trajectory = run.trajectory;
    rec.histogram = indegree_histogram(run.state);
    try {
        rec.mle = fit_power_law(rec.histogram, FitMethod::mle);
        rec.loglog = fit_power_law(rec.histogram, FitMethod::loglog_ls);
    }
    catch (const Error& e) {
        rec.fit_error = e.what();
    }
    if (!run.trajectory.records.empty()) rec.final_efficiency = run.trajectory.records.back().efficiency;
    rec.early_share = early_improvement_share(run.trajectory, 3);
    return rec;
}

RunRecord run_single(const ModelParams& p)
{
    CheckedParams checked = validate_params(p);
    TopicWorld world = generate_world(checked);
    Engine engine(world, checked);
    RunRecord rec = analyse_run(engine.run(), checked.exceeds_topic_capacity);
    rec.seed = p.seed;
    return rec;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values)
{
    return {quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75),
            static_cast<std::int64_t>(values.size())};
}

const std::vector<std::string>& metric_names()
{
    static const std::vector<std::string> names = {
        "mle_exponent", "mle_goodness", "loglog_exponent", "loglog_goodness",
        "final_efficiency", "early_share", "iterations", "links"};
    return names;
}

std::optional<double> metric_value(const RunRecord& rec, const std::string& metric)
{
    if (!rec.ok()) return std::nullopt;
    if (metric == "mle_exponent") return rec.mle ? std::optional(rec.mle->exponent) : std::nullopt;
    if (metric == "mle_goodness") return rec.mle ? std::optional(rec.mle->goodness) : std::nullopt;
    if (metric == "loglog_exponent") return rec.loglog ? std::optional(rec.loglog->exponent) : std::nullopt;
    if (metric == "loglog_goodness") return rec.loglog ? std::optional(rec.loglog->goodness) : std::nullopt;
    if (metric == "final_efficiency") return rec.final_efficiency;
    if (metric == "early_share") return rec.early_share;
    if (metric == "iterations") return static_cast<double>(rec.trajectory.records.size());
    if (metric == "links")
        return rec.trajectory.records.empty() ? 0.0
                                              : static_cast<double>(rec.trajectory.records.back().cumulative_links);
    throw Error(fmt::format("unknown metric '{}'", metric));
}

std::size_t sweep_threads()
{
    if (const char* env = std::getenv("KKPS_SIM_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult run_sweep(const SweepConfig& cfg, std::size_t threads)
{
    SweepResult result;
    result.config = cfg;
    result.cells = enumerate_cells(cfg);
    const auto seeds = cfg.effective_seeds();
    if (seeds.empty()) throw Error("sweep needs at least one seed");

    const std::size_t total = result.cells.size() * seeds.size();
    result.records.resize(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const Cell& cell = result.cells[job / seeds.size()];
            const std::uint64_t seed = seeds[job % seeds.size()];
            RunRecord rec;
            try {
                rec = run_single(cell_params(cfg, cell, seed));
            }
            catch (const Error& e) {
                rec = RunRecord{};
                rec.error = e.what();
            }
            rec.cell = cell.index;
            rec.seed = seed;
            result.records[job] = std::move(rec);
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t count = std::clamp<std::size_t>(threads, 1, total);
        for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
        worker();
    }

    for (const Cell& cell : result.cells) {
        CellSummary summary{cell, 0, 0, {}};
        std::map<std::string, std::vector<double>> samples;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const RunRecord& rec = result.records[cell.index * seeds.size() + s];
            ++summary.runs;
            if (!rec.ok()) {
                ++summary.failed;
                continue;
            }
            for (const auto& metric : metric_names()) {
                if (auto v = metric_value(rec, metric)) samples[metric].push_back(*v);
            }
        }
        for (const auto& metric : metric_names()) summary.metrics[metric] = summarize(samples[metric]);
        result.summaries.push_back(std::move(summary));
    }
    return result;
}

const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names = {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7"};
    return names;
}

SweepConfig preset(const std::string& name)
{
    SweepConfig cfg;
    cfg.name = name;
    cfg.base.m = 750;
    cfg.base.n = 1500;
    cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const Axis init_axis{{"init_dist"}, {"uniform", "poisson", "normal"}};

    if (name == "fig2") {
        cfg.axes = {{{"k"}, {"80", "120"}}, {{"a", "b"}, {"1", "3", "5", "10", "20"}}, init_axis};
    }
    else if (name == "fig3") {
        cfg.base.a = 20;
        cfg.axes = {{{"k"}, {"80", "120"}}, {{"b"}, {"1", "3", "5", "10", "20"}}, init_axis};
    }
    else if (name == "fig4") {
        cfg.base.k = 80;
        cfg.base.b = 2;
        cfg.axes = {{{"a"}, {"2", "4", "6", "8", "20"}}};
    }
    else if (name == "fig5") {
        cfg.base.a = 1;
        cfg.base.b = 1;
        cfg.axes = {{{"k"}, {"30", "60", "90", "120"}}};
    }
    else if (name == "fig6") {
        cfg.base.a = 8;
        cfg.base.b = 2;
        cfg.axes = {{{"k"}, {"20", "80", "160"}}};
    }
    else if (name == "fig7") {
        cfg.base.a = 8;
        cfg.base.k = 160;
        cfg.axes = {{{"b"}, {"2", "4", "6", "8"}}};
    }
    else {
        throw UnknownPreset(fmt::format("unknown preset '{}' (expected fig2..fig7)", name));
    }
    return cfg;
}

TrendCheck trend_check(std::vector<double> axis_values, std::vector<double> medians, int expected_sign)
{
    if (axis_values.size() != medians.size())
        throw Error("trend_check: axis and medians differ in length");
    if (axis_values.size() < 3)
        throw InsufficientCells(fmt::format("trend needs >= 3 axis values, got {}", axis_values.size()));

    TrendCheck check;
    check.expected_sign = expected_sign;
    check.axis_values = std::move(axis_values);
    check.medians = std::move(medians);
    for (std::size_t i = 0; i + 1 < check.medians.size(); ++i) {
        if (expected_sign * (check.medians[i + 1] - check.medians[i]) < 0.0) ++check.inversions;
    }
    const bool finite = std::all_of(check.medians.begin(), check.medians.end(),
                                    [](double v) { return std::isfinite(v); });
    check.correlation = finite ? spearman(check.axis_values, check.medians) : 0.0;
    check.pass = finite && check.correlation * expected_sign > 0.0 && check.inversions <= 1;
    if (!finite) check.detail = "missing medians";
    return check;
}

namespace {

std::string value_of(const Cell& cell, const std::string& param)
{
    for (const auto& [name, value] : cell.assignments) {
        if (name == param) return value;
    }
    return {};
}

// Label of the cell without the assignments of one axis.
std::string group_label(const Cell& cell, const Axis& axis)
{
    std::string label;
    for (const auto& [name, value] : cell.assignments) {
        if (std::find(axis.params.begin(), axis.params.end(), name) != axis.params.end()) continue;
        if (!label.empty()) label += ' ';
        label += fmt::format("{}={}", name, value);
    }
    return label;
}

struct Curve {
    std::string group;
    std::vector<const CellSummary*> points; //!< in axis order
};

// Curves along the axis whose first parameter is `param`, one per setting of
// the remaining axes, in canonical cell order.
std::vector<Curve> curves_along(const SweepResult& result, const std::string& param)
{
    const Axis* axis = nullptr;
    for (const Axis& a : result.config.axes) {
        if (std::find(a.params.begin(), a.params.end(), param) != a.params.end()) axis = &a;
    }
    if (!axis) throw Error(fmt::format("sweep has no axis '{}'", param));

    std::vector<Curve> curves;
    for (const CellSummary& s : result.summaries) {
        std::string group = group_label(s.cell, *axis);
        auto it = std::find_if(curves.begin(), curves.end(), [&](const Curve& c) { return c.group == group; });
        if (it == curves.end()) {
            curves.push_back({group, {}});
            it = std::prev(curves.end());
        }
        it->points.push_back(&s);
    }
    for (Curve& c : curves) {
        std::stable_sort(c.points.begin(), c.points.end(), [&](const CellSummary* x, const CellSummary* y) {
            auto vx = std::find(axis->values.begin(), axis->values.end(), value_of(x->cell, param));
            auto vy = std::find(axis->values.begin(), axis->values.end(), value_of(y->cell, param));
            return vx < vy;
        });
    }
    return curves;
}

double axis_number(const Cell& cell, const std::string& param)
{
    return std::strtod(value_of(cell, param).c_str(), nullptr);
}

TrendCheck curve_trend(const Curve& curve, const std::string& axis, const std::string& metric, int sign,
                       std::string claim, bool gated)
{
    std::vector<double> xs, ys;
    for (const CellSummary* s : curve.points) {
        xs.push_back(axis_number(s->cell, axis));
        ys.push_back(s->metrics.at(metric).median);
    }
    TrendCheck check = trend_check(std::move(xs), std::move(ys), sign);
    check.claim = std::move(claim);
    check.group = curve.group;
    check.metric = metric;
    check.axis = axis;
    check.gated = gated;
    return check;
}

void power_law_claims(const SweepResult& result, std::vector<TrendCheck>& out)
{
    for (const Curve& curve : curves_along(result, "b")) {
        const bool panel_i = curve.group.find("k=80") != std::string::npos;
        out.push_back(curve_trend(curve, "b", "mle_goodness", -1, "power-law validity decreases with b", panel_i));
        out.push_back(curve_trend(curve, "b", "loglog_goodness", -1, "power-law validity decreases with b (loglog-ls)",
                                  false));
    }

    // exponent(k=120) - exponent(k=80) per b, one curve per init distribution
    std::map<std::string, std::map<std::string, std::vector<const CellSummary*>>> by_init;
    for (const CellSummary& s : result.summaries)
        by_init[value_of(s.cell, "init_dist")][value_of(s.cell, "k")].push_back(&s);
    for (const auto& [init, by_k] : by_init) {
        auto lo = by_k.find("80");
        auto hi = by_k.find("120");
        if (lo == by_k.end() || hi == by_k.end() || lo->second.size() != hi->second.size()) continue;
        std::vector<double> bs, diffs;
        for (std::size_t j = 0; j < lo->second.size(); ++j) {
            bs.push_back(axis_number(lo->second[j]->cell, "b"));
            diffs.push_back(hi->second[j]->metrics.at("mle_exponent").median -
                            lo->second[j]->metrics.at("mle_exponent").median);
        }
        const bool below = std::all_of(diffs.begin(), diffs.end(), [](double d) { return d < 0.0; });
        TrendCheck check;
        check.claim = "more topics: exponent lower or decaying faster in b";
        check.group = fmt::format("init_dist={}", init);
        check.metric = "mle_exponent[k=120] - mle_exponent[k=80]";
        check.axis = "b";
        check.axis_values = bs;
        check.medians = diffs;
        check.expected_sign = -1;
        check.correlation = spearman(bs, diffs);
        for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
            if (diffs[i + 1] > diffs[i]) ++check.inversions;
        }
        const bool finite = std::all_of(diffs.begin(), diffs.end(), [](double d) { return std::isfinite(d); });
        check.pass = finite && (below || check.correlation < 0.0);
        if (below) check.detail = fmt::format("k=120 curve lies below at every b, rho {:.3f}", check.correlation);
        out.push_back(std::move(check));
    }
}

void early_claims(const SweepResult& result, std::vector<TrendCheck>& out)
{
    for (const CellSummary& s : result.summaries) {
        TrendCheck check;
        check.claim = "most efficiency gain within 3 iterations";
        check.group = s.cell.label;
        check.metric = "early_share";
        const double share = s.metrics.at("early_share").median;
        check.medians = {share};
        check.pass = share >= 0.8;
        check.detail = fmt::format("median share {:.4f} (>= 0.8)", share);
        out.push_back(std::move(check));
    }
}

const CellSummary* find_cell(const SweepResult& result, const std::string& param, const std::string& value)
{
    for (const CellSummary& s : result.summaries) {
        if (value_of(s.cell, param) == value) return &s;
    }
    return nullptr;
}

} // namespace

std::vector<TrendCheck> trend_tests(const SweepResult& result)
{
    std::vector<TrendCheck> out;
    const std::string& name = result.config.name;
    if (name == "fig2" || name == "fig3") {
        power_law_claims(result, out);
    }
    else if (name == "fig4") {
        for (const Curve& c : curves_along(result, "a"))
            out.push_back(curve_trend(c, "a", "final_efficiency", 1, "efficiency increases with a", true));
        const CellSummary* a2 = find_cell(result, "a", "2");
        const CellSummary* a4 = find_cell(result, "a", "4");
        const CellSummary* a8 = find_cell(result, "a", "8");
        const CellSummary* a20 = find_cell(result, "a", "20");
        if (a2 && a4 && a8 && a20) {
            auto eff = [](const CellSummary* s) { return s->metrics.at("final_efficiency").median; };
            TrendCheck check;
            check.claim = "efficiency gains in a diminish";
            check.metric = "final_efficiency";
            check.axis = "a";
            const double early = eff(a4) - eff(a2);
            const double late = eff(a20) - eff(a8);
            check.medians = {early, late};
            check.pass = late < early;
            check.detail = fmt::format("gain 2->4 = {:.4f}, gain 8->20 = {:.4f}", early, late);
            out.push_back(std::move(check));
        }
    }
    else if (name == "fig5") {
        for (const Curve& c : curves_along(result, "k"))
            out.push_back(curve_trend(c, "k", "final_efficiency", 1, "efficiency increases with k (a=b)", false));
    }
    else if (name == "fig6") {
        for (const Curve& c : curves_along(result, "k"))
            out.push_back(curve_trend(c, "k", "final_efficiency", 1, "efficiency increases with k", true));
    }
    else if (name == "fig7") {
        for (const Curve& c : curves_along(result, "b"))
            out.push_back(curve_trend(c, "b", "final_efficiency", 1, "efficiency increases with b", true));
    }
    else {
        return out;
    }
    early_claims(result, out);
    return out;
}

} // namespace kkps
