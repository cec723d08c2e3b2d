#pragma once

#include "kkps/analysis.hpp"
#include "kkps/engine.hpp"
#include "kkps/params.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kkps {

//! One swept dimension. All names in `params` receive the same value, which
//! expresses linked grids such as a = b.
struct Axis {
    std::vector<std::string> params;
    std::vector<std::string> values;

    bool operator==(const Axis&) const = default;
};

struct SweepConfig {
    std::string name = "sweep";
    ModelParams base;
    std::vector<Axis> axes;
    //! Explicit seeds; when empty, `replicates` consecutive seeds starting at
    //! base.seed are used.
    std::vector<std::uint64_t> seeds;
    std::int64_t replicates = 1;

    std::vector<std::uint64_t> effective_seeds() const;

    bool operator==(const SweepConfig&) const = default;
};

struct Cell {
    std::size_t index = 0;
    std::vector<std::pair<std::string, std::string>> assignments; //!< (param, value)
    std::string label;
};

//! Cartesian product of the axes, first axis outermost.
std::vector<Cell> enumerate_cells(const SweepConfig& cfg);

//! Base parameters with the cell's assignments and the given seed applied.
ModelParams cell_params(const SweepConfig& cfg, const Cell& cell, std::uint64_t seed);

//! Outcome of one (cell, seed) run.
struct RunRecord {
    std::size_t cell = 0;
    std::uint64_t seed = 0;
    std::string error; //!< validation or runtime failure; empty on success
    bool capacity_warning = false;
    Trajectory trajectory;
    DegreeHistogram histogram;
    std::optional<PowerLawFit> mle;
    std::optional<PowerLawFit> loglog;
    std::string fit_error;
    double final_efficiency = 0.0;
    double early_share = 0.0;

    bool ok() const { return error.empty(); }
};

//! Analysis of one finished run, shared by single runs and sweeps.
RunRecord analyse_run(const RunResult& run, bool capacity_warning);

//! Runs world generation, the dynamics and the analysis for one parameter set.
RunRecord run_single(const ModelParams& p);

struct Summary {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::int64_t count = 0;
};

//! Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);
Summary summarize(const std::vector<double>& values);

//! Metrics aggregated per cell, in output order.
const std::vector<std::string>& metric_names();
std::optional<double> metric_value(const RunRecord& rec, const std::string& metric);

struct CellSummary {
    Cell cell;
    std::int64_t runs = 0;
    std::int64_t failed = 0;
    std::map<std::string, Summary> metrics;
};

struct SweepResult {
    SweepConfig config;
    std::vector<Cell> cells;
    std::vector<RunRecord> records; //!< cell-major, then seed order
    std::vector<CellSummary> summaries;
};

//! Worker count for sweeps: KKPS_SIM_THREADS if set and positive, else the
//! hardware concurrency.
std::size_t sweep_threads();

//! Runs every (cell, seed). Cells that fail validation produce error records
//! without affecting the others. Results are independent of `threads`.
SweepResult run_sweep(const SweepConfig& cfg, std::size_t threads = sweep_threads());

const std::vector<std::string>& preset_names();

//! Built-in parameter grid (fig2 ... fig7).
SweepConfig preset(const std::string& name);

struct TrendCheck {
    std::string claim;
    std::string group; //!< fixed parameters of the curve, e.g. "k=80 init_dist=uniform"
    std::string metric;
    std::string axis;
    std::vector<double> axis_values;
    std::vector<double> medians;
    int expected_sign = 1;
    double correlation = 0.0;
    std::int64_t inversions = 0;
    bool pass = false;
    bool gated = true; //!< false for checks that are reported only
    std::string detail;
};

//! Monotone-trend test: passes when the Spearman correlation of medians
//! against the axis has the expected sign and at most one adjacent pair moves
//! the wrong way. Throws InsufficientCells below three axis values.
TrendCheck trend_check(std::vector<double> axis_values, std::vector<double> medians, int expected_sign);

//! Evaluates the qualitative trend claims that apply to the result's
//! preset. Unknown sweep names yield an empty report.
std::vector<TrendCheck> trend_tests(const SweepResult& result);

} // namespace kkps
