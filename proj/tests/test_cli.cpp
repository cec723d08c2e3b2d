#include "kkps/cli.hpp"
#include "kkps/errors.hpp"
#include "kkps/io.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace kkps;

namespace {

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "kkps-sim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("run command with explicit parameters")
{
    CliCommand cmd = parse_cli({"run", "--k", "80", "--m", "750", "--n", "1500", "--a", "1", "--b", "1",
                                "--init-dist", "uniform", "--seed", "42"});
    CHECK(cmd.subcommand == Subcommand::run);
    ModelParams p = resolve_params(cmd);
    CHECK(p.k == 80);
    CHECK(p.m == 750);
    CHECK(p.n == 1500);
    CHECK(p.a == 1);
    CHECK(p.b == 1);
    CHECK(p.init_dist.kind == InitKind::uniform);
    CHECK(p.seed == 42);
}

TEST_CASE("preset command")
{
    CliCommand cmd = parse_cli({"preset", "fig7", "--out", "results/"});
    CHECK(cmd.subcommand == Subcommand::preset);
    CHECK(cmd.target == "fig7");
    REQUIRE(cmd.out);
    CHECK(*cmd.out == "results/");
    SweepConfig cfg = resolve_sweep(cmd);
    CHECK(cfg == preset("fig7"));

    cmd = parse_cli({"preset", "fig4", "--seeds", "3", "--seed", "7"});
    cfg = resolve_sweep(cmd);
    CHECK(cfg.effective_seeds() == std::vector<std::uint64_t>{7, 8, 9});
    cmd = parse_cli({"preset", "fig4", "--seeds", "4,2,9"});
    CHECK(resolve_sweep(cmd).effective_seeds() == std::vector<std::uint64_t>{4, 2, 9});
}

TEST_CASE("usage errors name the offending token")
{
    auto message = [](std::vector<std::string> args) {
        try {
            parse_cli(args);
        }
        catch (const UsageError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message({"run", "--k", "0"}).find("--k") != std::string::npos);
    CHECK(message({"run", "--frobnicate", "1"}).find("--frobnicate") != std::string::npos);
    CHECK(message({"run", "--a", "1", "--b", "2"}).find("no error") == std::string::npos);
    CHECK(message({"run", "--scope", "local"}).find("local") != std::string::npos);
    CHECK(message({"run", "--init-dist", "normal:5,0"}).find("--init-dist") != std::string::npos);
    CHECK(message({"preset", "fig9"}).find("fig9") != std::string::npos);
    CHECK(message({"sweep"}).find("no error") == std::string::npos);
    CHECK(message({"preset", "fig2", "--seeds", "0"}).find("--seeds") != std::string::npos);
    CHECK(message({"preset", "fig2", "--seeds", "1,x"}).find("x") != std::string::npos);
    CHECK(message({"plot", "bars", "a.csv"}).find("bars") != std::string::npos);
    CHECK(message({}).find("no error") == std::string::npos);
    CHECK(message({"run", "--max-iter", "0"}) == "no error");
}

TEST_CASE("help documents every flag")
{
    CliCommand top = parse_cli({"--help"});
    CHECK(top.help);
    for (const char* sub : {"run", "sweep", "preset", "fit", "plot"}) CHECK(top.help_text.find(sub) != std::string::npos);

    CliCommand run = parse_cli({"run", "--help"});
    for (const char* flag : {"--k", "--m", "--n", "--a", "--b", "--init-dist", "--q-dist", "--seed", "--max-iter",
                             "--scope", "--out", "--format", "--config", "--update", "--tie-break"})
        CHECK(run.help_text.find(flag) != std::string::npos);
    CHECK(parse_cli({"preset", "--help"}).help_text.find("--seeds") != std::string::npos);

    Invocation inv = invoke({"--help"});
    CHECK(inv.code == 0);
    CHECK(inv.out.find("Usage") != std::string::npos);
}

TEST_CASE("exit codes")
{
    CHECK(invoke({"run", "--k", "0"}).code == 1);
    CHECK(invoke({"run", "--bogus"}).code == 1);
    CHECK(invoke({"run", "--k", "5", "--m", "3"}).code == 1);
    CHECK(invoke({"run", "--config", "/nonexistent/kkps.json"}).code == 1);
    CHECK(invoke({"fit", "/nonexistent/hist.csv"}).code == 2);

    oracle::TempDir dir;
    write_text_file(dir / "one.csv", "degree,count\n3,40\n");
    Invocation degenerate = invoke({"fit", (dir / "one.csv").string()});
    CHECK(degenerate.code == 2);
    CHECK(degenerate.err.find("error") != std::string::npos);

    Invocation ok = invoke({"run", "--k", "4", "--m", "20", "--n", "40", "--a", "3", "--b", "2"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("final efficiency") != std::string::npos);
}

TEST_CASE("config file with flag override is echoed into the manifest")
{
    oracle::TempDir dir;
    write_text_file(dir / "cfg.json", R"({"k": 10, "m": 50, "n": 100, "a": 6, "b": 2})");
    Invocation inv = invoke({"run", "--config", (dir / "cfg.json").string(), "--b", "5", "--out", (dir / "out").string()});
    REQUIRE(inv.code == 0);
    Json manifest = Json::parse(oracle::read_file(dir / "out" / "manifest.json"));
    CHECK(manifest["config"]["b"] == 5);
    CHECK(manifest["config"]["a"] == 6);
    CHECK(manifest["command"] == "run");

    // the manifest reloads to the same resolved parameters and reproduces the run
    ModelParams resolved = std::get<ModelParams>(load_config(dir / "out" / "manifest.json"));
    CHECK(params_to_json(resolved) == manifest["config"]);
    Invocation again = invoke({"run", "--config", (dir / "out" / "manifest.json").string(), "--out",
                               (dir / "again").string()});
    REQUIRE(again.code == 0);
    for (const char* file : {"trajectory.csv", "links.tsv", "histogram.csv", "fit.json", "world.json", "manifest.json"})
        CHECK(oracle::read_file(dir / "out" / file) == oracle::read_file(dir / "again" / file));
}

TEST_CASE("run outputs follow their schemas")
{
    oracle::TempDir dir;
    Invocation inv = invoke({"run", "--k", "8", "--m", "60", "--n", "160", "--a", "4", "--b", "2", "--seed", "3",
                             "--out", dir.path().string(), "--format", "json"});
    REQUIRE(inv.code == 0);
    Json summary = Json::parse(inv.out);
    CHECK(summary.contains("final_efficiency"));

    std::ifstream traj(dir / "trajectory.csv");
    EfficiencySeries s = read_efficiency_csv(traj, "run");
    CHECK(s.iterations.size() == summary["iterations"].get<std::size_t>());

    std::ifstream hist(dir / "histogram.csv");
    CHECK(read_histogram_csv(hist).total == 160);

    const std::string links = oracle::read_file(dir / "links.tsv");
    CHECK(static_cast<std::int64_t>(std::count(links.begin(), links.end(), '\n')) == summary["links"].get<std::int64_t>());

    Json fits = Json::parse(oracle::read_file(dir / "fit.json"));
    CHECK(fits.contains("mle"));
    CHECK(fits.contains("loglog-ls"));

    TopicWorld w = world_from_json(Json::parse(oracle::read_file(dir / "world.json")));
    ModelParams p;
    p.k = 8;
    p.m = 60;
    p.n = 160;
    p.a = 4;
    p.b = 2;
    p.seed = 3;
    CHECK(w == generate_world(validate_params(p)));
}

TEST_CASE("sweep, fit and plot subcommands")
{
    oracle::TempDir dir;
    write_text_file(dir / "sweep.json", R"({"name": "tiny", "base": {"k": 4, "m": 40, "n": 80, "a": 4},
        "axes": [{"param": "b", "values": [1, 2, 3]}], "seeds": [1, 2]})");
    Invocation sw = invoke({"sweep", (dir / "sweep.json").string(), "--out", (dir / "res").string()});
    REQUIRE(sw.code == 0);
    CHECK(std::filesystem::exists(dir / "res" / "aggregate.csv"));
    CHECK(std::filesystem::exists(dir / "res" / "cells" / "cell_002_hist.csv"));
    CHECK(std::get<SweepConfig>(load_config(dir / "res" / "manifest.json")).name == "tiny");

    Invocation fit = invoke({"fit", (dir / "res" / "cells" / "cell_002_hist.csv").string(), "--format", "json"});
    REQUIRE(fit.code == 0);
    Json fits = Json::parse(fit.out);
    CHECK(fits.contains("mle"));

    Invocation plot = invoke({"plot", "efficiency-curve", (dir / "res" / "cells" / "cell_000.csv").string(),
                              (dir / "res" / "cells" / "cell_001.csv").string(), "--out", (dir / "eff.svg").string()});
    REQUIRE(plot.code == 0);
    CHECK(oracle::read_file(dir / "eff.svg").rfind("<svg", 0) == 0);

    write_text_file(dir / "empty.csv", "");
    CHECK(invoke({"plot", "efficiency-curve", (dir / "empty.csv").string(), "--out", dir.path().string()}).code == 2);
}
