#pragma once

#include "kkps/experiments.hpp"
#include "kkps/params.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kkps {

enum class Subcommand { run, sweep, preset, fit, plot };
enum class OutputFormat { text, json, csv };

struct CliCommand {
    Subcommand subcommand = Subcommand::run;
    //! (parameter name, value) in command-line order.
    std::vector<std::pair<std::string, std::string>> overrides;
    std::optional<std::filesystem::path> config; //!< run: --config file
    //! sweep: config path, preset: preset name, fit: degree CSV, plot: kind.
    std::string target;
    std::vector<std::filesystem::path> inputs; //!< plot inputs
    std::optional<std::filesystem::path> out;
    std::vector<std::uint64_t> seeds;     //!< --seeds as a list
    std::optional<std::int64_t> replicates; //!< --seeds as a count
    std::string fit_method = "both";
    OutputFormat format = OutputFormat::text;
    int verbosity = 0;
    bool help = false;
    std::string help_text;
};

//! Parses the arguments after the program name. Throws UsageError naming the
//! offending token. Parameter values are checked here, so `run --k 0` fails
//! before any simulation.
CliCommand parse_cli(const std::vector<std::string>& args);
CliCommand parse_cli(int argc, const char* const* argv);

//! Parameters of a run: defaults, then the --config file, then the flags.
ModelParams resolve_params(const CliCommand& cmd);

//! Sweep of a `sweep` or `preset` command with flag overrides applied to the
//! base parameters and --seeds applied last.
SweepConfig resolve_sweep(const CliCommand& cmd);

//! Executes a parsed command and returns the process exit code: 0 success,
//! 1 usage or configuration error, 2 runtime error.
int execute(const CliCommand& cmd, std::ostream& out, std::ostream& err);

//! parse_cli() followed by execute(), with errors mapped to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace kkps
