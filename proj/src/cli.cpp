#include "kkps/cli.hpp"

#include "kkps/analysis.hpp"
#include "kkps/engine.hpp"
#include "kkps/errors.hpp"
#include "kkps/io.hpp"
#include "kkps/plot.hpp"
#include "kkps/world.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace kkps {

namespace {

struct ParamFlag {
    const char* flag;
    const char* param;
    const char* help;
};

const ParamFlag param_flags[] = {
    {"--k", "k", "number of topics (positive)"},
    {"--m", "m", "number of user-queries (positive)"},
    {"--n", "n", "number of documents (positive)"},
    {"--a", "a", "documents recommended per user and iteration"},
    {"--b", "b", "documents endorsed per user and iteration, b <= a"},
    {"--init-dist", "init_dist", "initial pseudo in-degree: uniform[:max] | poisson[:lambda] | normal[:mu,sigma]"},
    {"--q-dist", "q_dist", "nonzero matrix entries: uniform01 | one"},
    {"--seed", "seed", "master seed"},
    {"--max-iter", "max_iterations", "iteration cap (>= 0)"},
    {"--scope", "scope", "recommendation candidates: topic | global"},
    {"--update", "update", "in-degree visibility within an iteration: synchronous | sequential"},
    {"--tie-break", "tie_break", "equal scores: index | random"},
};

std::string_view flag_of(std::string_view param)
{
    for (const auto& f : param_flags) {
        if (param == f.param) return f.flag;
    }
    return param;
}

void add_param_flags(CLI::App* sub, CliCommand& cmd)
{
    for (const auto& f : param_flags) {
        std::string param = f.param;
        sub->add_option_function<std::string>(
               f.flag, [&cmd, param](const std::string& v) { cmd.overrides.emplace_back(param, v); }, f.help)
            ->type_name("VALUE");
    }
}

void add_common_flags(CLI::App* sub, CliCommand& cmd, const char* out_help)
{
    sub->add_option("--out", cmd.out, out_help)->type_name("PATH");
    sub->add_flag("-v,--verbose", cmd.verbosity, "more progress output on stderr");
}

void add_format_flag(CLI::App* sub, std::string& format)
{
    sub->add_option("--format", format, "stdout format: text | json | csv")
        ->check(CLI::IsMember({"text", "json", "csv"}));
}

void add_seeds_flag(CLI::App* sub, std::string& seeds)
{
    sub->add_option("--seeds", seeds, "replicate count N (seeds base..base+N-1) or a comma-separated seed list")
        ->type_name("N|LIST");
}

std::uint64_t parse_seed_token(std::string_view token, std::string_view whole)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
        throw UsageError(fmt::format("--seeds {}: '{}' is not a non-negative integer", whole, token));
    return v;
}

void parse_seeds(CliCommand& cmd, const std::string& text)
{
    if (text.empty()) return;
    if (text.find(',') == std::string::npos) {
        const std::uint64_t count = parse_seed_token(text, text);
        if (count == 0) throw UsageError(fmt::format("--seeds {}: count must be positive", text));
        cmd.replicates = static_cast<std::int64_t>(count);
        return;
    }
    std::string_view rest = text;
    while (true) {
        auto comma = rest.find(',');
        cmd.seeds.push_back(parse_seed_token(rest.substr(0, comma), text));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
}

//! Rejects malformed or out-of-range flag values before anything runs.
void check_overrides(const CliCommand& cmd)
{
    for (const auto& [param, value] : cmd.overrides) {
        ModelParams p;
        try {
            set_param(p, param, value);
        }
        catch (const Error& e) {
            throw UsageError(fmt::format("{} {}: {}", flag_of(param), value, e.what()));
        }
        auto bad = [&](std::string_view why) {
            throw UsageError(fmt::format("{} {}: {}", flag_of(param), value, why));
        };
        if ((param == "k" && p.k <= 0) || (param == "m" && p.m <= 0) || (param == "n" && p.n <= 0) ||
            (param == "a" && p.a <= 0) || (param == "b" && p.b <= 0))
            bad("must be positive");
        if (param == "max_iterations" && p.max_iterations < 0) bad("must be non-negative");
        if (param == "init_dist") {
            const InitDist& d = p.init_dist;
            if (d.u_max <= 0 || d.lambda <= 0 || d.sigma <= 0) bad("distribution parameters must be positive");
        }
    }
}

void apply_overrides(ModelParams& p, const CliCommand& cmd)
{
    for (const auto& [param, value] : cmd.overrides) set_param(p, param, value);
}

OutputFormat parse_format(const std::string& text)
{
    if (text == "json") return OutputFormat::json;
    if (text == "csv") return OutputFormat::csv;
    return OutputFormat::text;
}

bool is_config_error(const std::exception& e)
{
    return dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
           dynamic_cast<const UnknownKey*>(&e) || dynamic_cast<const NonPositive*>(&e) ||
           dynamic_cast<const OrderingViolation*>(&e) || dynamic_cast<const UnknownPreset*>(&e) ||
           dynamic_cast<const InvalidDistParams*>(&e);
}

Json manifest_header(std::string_view command)
{
    Json m;
    m["tool"] = tool_name;
    m["version"] = tool_version;
    m["command"] = command;
    return m;
}

Json fit_or_error(const std::optional<PowerLawFit>& fit, const std::string& error)
{
    if (fit) return fit_to_json(*fit);
    Json j;
    j["error"] = error;
    return j;
}

Json run_summary(const RunRecord& rec, double total_utility)
{
    Json s;
    const auto& records = rec.trajectory.records;
    s["iterations"] = records.size();
    s["converged"] = rec.trajectory.converged;
    s["distinct_phase"] = rec.trajectory.distinct_phase;
    s["links"] = records.empty() ? 0 : records.back().cumulative_links;
    s["total_utility"] = total_utility;
    s["final_efficiency"] = rec.final_efficiency;
    s["early_share"] = rec.early_share;
    s["mle"] = fit_or_error(rec.mle, rec.fit_error);
    s["loglog-ls"] = fit_or_error(rec.loglog, rec.fit_error);
    return s;
}

std::string fit_line(std::string_view name, const Json& fit)
{
    if (fit.contains("error")) return fmt::format("{}: no fit ({})", name, fit["error"].get<std::string>());
    return fmt::format("{}: exponent {} xmin {} goodness {} sample {}", name, format_number(fit["exponent"]),
                       fit["xmin"].get<std::int64_t>(), format_number(fit["goodness"]),
                       fit["sample_size"].get<std::int64_t>());
}

int execute_run(const CliCommand& cmd, std::ostream& out, std::ostream& err)
{
    const ModelParams p = resolve_params(cmd);
    const CheckedParams checked = validate_params(p);
    for (const auto& w : checked.warnings) err << "warning: " << w << '\n';
    if (cmd.verbosity > 0) err << "run " << params_to_json(p).dump() << '\n';

    const TopicWorld world = generate_world(checked);
    const Engine engine(world, checked);
    const RunResult result = engine.run();
    RunRecord rec = analyse_run(result, checked.exceeds_topic_capacity);
    rec.seed = p.seed;
    const Json summary = run_summary(rec, engine.total_utility());

    if (cmd.out) {
        namespace fs = std::filesystem;
        const fs::path dir = *cmd.out;
        fs::create_directories(dir);
        std::ostringstream traj, links, hist;
        write_trajectory_csv(traj, result.trajectory);
        write_edge_list(links, result.state);
        write_histogram_csv(hist, rec.histogram);
        write_text_file(dir / "trajectory.csv", traj.str());
        write_text_file(dir / "links.tsv", links.str());
        write_text_file(dir / "histogram.csv", hist.str());
        Json fits;
        fits["mle"] = summary["mle"];
        fits["loglog-ls"] = summary["loglog-ls"];
        write_text_file(dir / "fit.json", fits.dump(2) + "\n");
        write_text_file(dir / "world.json", world_to_json(world).dump() + "\n");

        Json manifest = manifest_header("run");
        manifest["config"] = params_to_json(p);
        manifest["warnings"] = checked.warnings;
        manifest["outputs"] = {"trajectory.csv", "links.tsv", "histogram.csv", "fit.json", "world.json"};
        manifest["summary"] = summary;
        write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
        if (cmd.verbosity > 0) err << "wrote " << dir.string() << '\n';
    }

    switch (cmd.format) {
    case OutputFormat::json: out << summary.dump(2) << '\n'; break;
    case OutputFormat::csv: write_trajectory_csv(out, result.trajectory); break;
    case OutputFormat::text:
        out << fmt::format("iterations {}{}\n", summary["iterations"].get<std::size_t>(),
                           rec.trajectory.converged ? " (converged)" : "");
        out << fmt::format("links {}\n", summary["links"].get<std::int64_t>());
        out << fmt::format("final efficiency {}\n", format_number(rec.final_efficiency));
        out << fmt::format("early share {}\n", format_number(rec.early_share));
        out << fit_line("mle", summary["mle"]) << '\n';
        out << fit_line("loglog-ls", summary["loglog-ls"]) << '\n';
        break;
    }
    return 0;
}

std::string median_text(const CellSummary& s, const std::string& metric)
{
    const Summary& st = s.metrics.at(metric);
    return st.count == 0 ? std::string("-") : fmt::format("{:.4f}", st.median);
}

int execute_sweep(const CliCommand& cmd, std::ostream& out, std::ostream& err)
{
    const SweepConfig cfg = resolve_sweep(cmd);
    const std::size_t threads = sweep_threads();
    if (cmd.verbosity > 0)
        err << fmt::format("{}: {} cells x {} seeds on {} threads\n", cfg.name, enumerate_cells(cfg).size(),
                           cfg.effective_seeds().size(), threads);

    const SweepResult result = run_sweep(cfg, threads);
    const std::vector<TrendCheck> trends = trend_tests(result);

    std::size_t failed = 0;
    for (const RunRecord& r : result.records) {
        if (r.ok()) continue;
        if (failed++ == 0) err << fmt::format("error: cell {} seed {}: {}\n", r.cell, r.seed, r.error);
    }
    if (failed > 0) err << fmt::format("{} of {} runs failed\n", failed, result.records.size());

    if (cmd.out) {
        Json manifest = manifest_header(cmd.subcommand == Subcommand::preset ? "preset" : "sweep");
        manifest["config"] = sweep_to_json(cfg);
        manifest["cells"] = result.cells.size();
        manifest["runs"] = result.records.size();
        manifest["failed_runs"] = failed;
        manifest["outputs"] = {"aggregate.csv", "records.csv", "trends.json", "cells/"};
        write_sweep_outputs(result, *cmd.out, manifest);
        if (cmd.verbosity > 0) err << "wrote " << cmd.out->string() << '\n';
    }

    if (cmd.format == OutputFormat::json) {
        Json j;
        j["name"] = cfg.name;
        j["cells"] = Json::array();
        for (const CellSummary& s : result.summaries) {
            Json c;
            c["cell"] = s.cell.index;
            c["label"] = s.cell.label;
            c["runs"] = s.runs;
            c["failed"] = s.failed;
            for (const auto& metric : metric_names()) {
                const Summary& st = s.metrics.at(metric);
                c[metric] = st.count == 0 ? Json(nullptr) : Json(st.median);
            }
            j["cells"].push_back(c);
        }
        j["trends"] = Json::array();
        for (const TrendCheck& t : trends) j["trends"].push_back(trend_to_json(t));
        out << j.dump(2) << '\n';
    }
    else {
        out << fmt::format("{:<4} {:<44} {:>9} {:>9} {:>11} {:>6}\n", "cell", "label", "mle_gof", "mle_exp",
                           "efficiency", "iters");
        for (const CellSummary& s : result.summaries) {
            out << fmt::format("{:<4} {:<44} {:>9} {:>9} {:>11} {:>6}\n", s.cell.index, s.cell.label,
                               median_text(s, "mle_goodness"), median_text(s, "mle_exponent"),
                               median_text(s, "final_efficiency"), median_text(s, "iterations"));
        }
        for (const TrendCheck& t : trends) {
            std::string medians;
            for (double v : t.medians) medians += fmt::format("{}{:.4f}", medians.empty() ? "" : " ", v);
            const std::string detail =
                t.detail.empty() ? fmt::format("{} over {} [{}] rho {:.3f} inversions {}", t.metric, t.axis, medians,
                                               t.correlation, t.inversions)
                                 : t.detail;
            out << fmt::format("{} {}{}{}: {}\n", t.pass ? "PASS" : "FAIL", t.claim, t.gated ? "" : " (reported)",
                               t.group.empty() ? "" : " [" + t.group + "]", detail);
        }
    }
    return failed == result.records.size() && failed > 0 ? 1 : 0;
}

int execute_fit(const CliCommand& cmd, std::ostream& out, std::ostream&)
{
    std::ifstream in(cmd.target, std::ios::binary);
    if (!in) throw SchemaMismatch(fmt::format("cannot read {}", cmd.target));
    const DegreeHistogram hist = read_histogram_csv(in);

    std::vector<FitMethod> methods;
    if (cmd.fit_method == "both") methods = {FitMethod::mle, FitMethod::loglog_ls};
    else methods = {parse_fit_method(cmd.fit_method)};

    Json fits;
    for (FitMethod m : methods) fits[std::string(to_string(m))] = fit_to_json(fit_power_law(hist, m));
    if (cmd.out) write_text_file(*cmd.out, fits.dump(2) + "\n");

    switch (cmd.format) {
    case OutputFormat::json: out << fits.dump(2) << '\n'; break;
    case OutputFormat::csv:
        out << "method,exponent,xmin,goodness,sample_size\n";
        for (const auto& [name, f] : fits.items()) {
            out << fmt::format("{},{},{},{},{}\n", name, format_number(f["exponent"]), f["xmin"].get<std::int64_t>(),
                               format_number(f["goodness"]), f["sample_size"].get<std::int64_t>());
        }
        break;
    case OutputFormat::text:
        for (const auto& [name, f] : fits.items()) out << fit_line(name, f) << '\n';
        break;
    }
    return 0;
}

int execute_plot(const CliCommand& cmd, std::ostream& out, std::ostream&)
{
    const PlotKind kind = parse_plot_kind(cmd.target);
    const auto written = emit_plots(cmd.inputs, kind, cmd.out.value_or("plots"));
    for (const auto& path : written) out << path.string() << '\n';
    return 0;
}

} // namespace

CliCommand parse_cli(const std::vector<std::string>& args)
{
    CliCommand cmd;
    std::string format = "text";
    std::string seeds;
    std::string plot_kind;

    CLI::App app{"Simulates how search-engine recommendations and user endorsements shape the in-degree "
                 "distribution of documents."};
    app.name(std::string(tool_name));
    app.set_version_flag("--version", std::string(tool_version));
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand("run", "one simulation; --out writes the full result set");
    add_param_flags(run, cmd);
    run->add_option("--config", cmd.config, "JSON parameter file; flags override its values")
        ->type_name("FILE");
    add_common_flags(run, cmd, "output directory");
    add_format_flag(run, format);

    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep from a JSON sweep config");
    sweep->add_option("config", cmd.target, "sweep config file")->required()->type_name("FILE");
    add_param_flags(sweep, cmd);
    add_seeds_flag(sweep, seeds);
    add_common_flags(sweep, cmd, "output directory");
    add_format_flag(sweep, format);

    CLI::App* pre = app.add_subcommand("preset", "parameter sweep over a built-in grid (fig2 ... fig7)");
    pre->add_option("name", cmd.target, "fig2 | fig3 | fig4 | fig5 | fig6 | fig7")
        ->required()
        ->check(CLI::IsMember(preset_names()));
    add_param_flags(pre, cmd);
    add_seeds_flag(pre, seeds);
    add_common_flags(pre, cmd, "output directory");
    add_format_flag(pre, format);

    CLI::App* fit = app.add_subcommand("fit", "power-law fit of a degree,count histogram CSV");
    fit->add_option("histogram", cmd.target, "degree histogram CSV")->required()->type_name("FILE");
    fit->add_option("--method", cmd.fit_method, "mle | loglog-ls | both")
        ->check(CLI::IsMember({"mle", "loglog-ls", "both"}));
    add_common_flags(fit, cmd, "also write the fits as JSON to this file");
    add_format_flag(fit, format);

    CLI::App* plot = app.add_subcommand("plot", "SVG plots from result CSVs");
    plot->add_option("kind", plot_kind, "loglog-degree | efficiency-curve")
        ->required()
        ->check(CLI::IsMember({"loglog-degree", "efficiency-curve"}));
    plot->add_option("inputs", cmd.inputs, "histogram CSVs (loglog-degree) or trajectory/cell CSVs")
        ->required()
        ->type_name("FILE");
    add_common_flags(plot, cmd, "output directory, or an .svg file for efficiency-curve (default plots)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp&) {
        cmd.help = true;
        cmd.help_text = app.help();
        return cmd;
    }
    catch (const CLI::CallForAllHelp&) {
        cmd.help = true;
        cmd.help_text = app.help("", CLI::AppFormatMode::All);
        return cmd;
    }
    catch (const CLI::CallForVersion&) {
        cmd.help = true;
        cmd.help_text = fmt::format("{} {}\n", tool_name, tool_version);
        return cmd;
    }
    catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (run->parsed()) cmd.subcommand = Subcommand::run;
    else if (sweep->parsed()) cmd.subcommand = Subcommand::sweep;
    else if (pre->parsed()) cmd.subcommand = Subcommand::preset;
    else if (fit->parsed()) cmd.subcommand = Subcommand::fit;
    else {
        cmd.subcommand = Subcommand::plot;
        cmd.target = plot_kind;
    }
    cmd.format = parse_format(format);
    parse_seeds(cmd, seeds);
    check_overrides(cmd);

    // without a config file the complete parameter set is known now
    if (cmd.subcommand == Subcommand::run && !cmd.config) {
        try {
            validate_params(resolve_params(cmd));
        }
        catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    return cmd;
}

CliCommand parse_cli(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return parse_cli(args);
}

ModelParams resolve_params(const CliCommand& cmd)
{
    ModelParams p;
    if (cmd.config) {
        Config c = load_config(*cmd.config);
        if (!std::holds_alternative<ModelParams>(c))
            throw UsageError(fmt::format("{} is a sweep config; use the sweep subcommand", cmd.config->string()));
        p = std::get<ModelParams>(c);
    }
    apply_overrides(p, cmd);
    return p;
}

SweepConfig resolve_sweep(const CliCommand& cmd)
{
    SweepConfig cfg;
    if (cmd.subcommand == Subcommand::preset) {
        cfg = preset(cmd.target);
    }
    else {
        Config c = load_config(cmd.target);
        if (auto* s = std::get_if<SweepConfig>(&c)) {
            cfg = *s;
        }
        else {
            cfg.name = std::filesystem::path(cmd.target).stem().string();
            cfg.base = std::get<ModelParams>(c);
        }
    }
    apply_overrides(cfg.base, cmd);
    if (!cmd.seeds.empty()) {
        cfg.seeds = cmd.seeds;
    }
    else if (cmd.replicates) {
        cfg.seeds.clear();
        cfg.replicates = *cmd.replicates;
    }
    return cfg;
}

int execute(const CliCommand& cmd, std::ostream& out, std::ostream& err)
{
    if (cmd.help) {
        out << cmd.help_text;
        return 0;
    }
    switch (cmd.subcommand) {
    case Subcommand::run: return execute_run(cmd, out, err);
    case Subcommand::sweep:
    case Subcommand::preset: return execute_sweep(cmd, out, err);
    case Subcommand::fit: return execute_fit(cmd, out, err);
    case Subcommand::plot: return execute_plot(cmd, out, err);
    }
    return 2;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    try {
        return execute(parse_cli(argc, argv), out, err);
    }
    catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        if (is_config_error(e)) {
            err << "run with --help for usage\n";
            return 1;
        }
        return 2;
    }
}

} // namespace kkps
